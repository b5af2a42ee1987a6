#include "dsmfuse/synth.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dsmfuse {

SeededStream::SeededStream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), purpose};
  engine_.seed(seq);
}

double SeededStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SceneSpec::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("scene: width and height must be >= 1");
  if (!(cell_size > 0.0)) throw std::invalid_argument("scene: cell_size must be positive");
  if (ground_height < 0.0) throw std::invalid_argument("scene: ground_height must be >= 0");
  if (intensity_noise < 0.0) throw std::invalid_argument("scene: intensity_noise must be >= 0");
  for (const auto& b : buildings) {
    if (b.width < 1 || b.height < 1 || b.col < 0 || b.row < 0 || b.col + b.width > width ||
        b.row + b.height > height) {
      throw std::invalid_argument("scene: building footprint outside the grid");
    }
    if (b.height_m < 0.0) throw std::invalid_argument("scene: building height must be >= 0");
  }
}

GridGeometry SceneSpec::geometry() const {
  return {origin_x, origin_y, cell_size, width, height};
}

Scene gen_scene(const SceneSpec& spec) {
  spec.validate();
  const GridGeometry g = spec.geometry();
  Scene scene{RasterGrid(g, spec.ground_height), RasterGrid(g, spec.ground_intensity)};
  for (const auto& b : spec.buildings) {
    for (int r = b.row; r < b.row + b.height; ++r) {
      for (int c = b.col; c < b.col + b.width; ++c) {
        scene.truth.at(c, r) = spec.ground_height + b.height_m;
        scene.ortho.at(c, r) = b.intensity;
      }
    }
  }
  if (spec.intensity_noise > 0.0) {
    SeededStream texture(spec.seed, static_cast<std::uint32_t>(StreamPurpose::Intensity));
    for (double& v : scene.ortho.values()) {
      v = std::clamp(v + spec.intensity_noise * texture.normal(), 0.0, 255.0);
    }
  }
  return scene;
}

void DegradeSpec::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!(gaussian_sigma >= 0.0)) throw std::invalid_argument("degrade: sigma must be >= 0");
  if (!prob(spike_prob) || !prob(hole_prob)) {
    throw std::invalid_argument("degrade: probabilities must be in [0, 1]");
  }
  if (!(spike_amp >= 0.0)) throw std::invalid_argument("degrade: spike_amp must be >= 0");
}

RasterGrid degrade(const RasterGrid& truth, const DegradeSpec& spec) {
  spec.validate();
  SeededStream noise(spec.seed, static_cast<std::uint32_t>(StreamPurpose::Noise));
  SeededStream spikes(spec.seed, static_cast<std::uint32_t>(StreamPurpose::Spikes));
  SeededStream holes(spec.seed, static_cast<std::uint32_t>(StreamPurpose::Holes));
  RasterGrid out = truth;
  for (double& v : out.values()) {
    // Every stream advances once per cell so each effect is independent of the others.
    const double n = noise.normal();
    const double spike_draw = spikes.uniform();
    const double spike_sign = spikes.uniform() < 0.5 ? -1.0 : 1.0;
    const double hole_draw = holes.uniform();
    if (!truth.valid(v)) continue;
    const double base = v;
    if (spec.gaussian_sigma > 0.0) v = base + spec.gaussian_sigma * n;
    if (spike_draw < spec.spike_prob) v = base + spike_sign * spec.spike_amp;
    if (hole_draw < spec.hole_prob) v = out.nodata();
  }
  return out;
}

std::vector<double> quality_ladder(int n, double lo, double hi) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw std::invalid_argument("quality_ladder: need n >= 1 and 0 < lo <= hi");
  }
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out.push_back(lo * std::pow(hi / lo, t));
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double to_double(const std::string& key, const std::string& s) {
  double v;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("scene spec: bad number for '" + key + "': '" + s + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& s) {
  const double v = to_double(key, s);
  if (v != std::floor(v)) throw std::invalid_argument("scene spec: '" + key + "' must be integer");
  return static_cast<int>(v);
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& text) {
  SceneSpec spec;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("scene spec: expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "seed") {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw std::invalid_argument("scene spec: bad seed");
      }
      spec.seed = s;
    } else if (key == "width") {
      spec.width = to_int(key, value);
    } else if (key == "height") {
      spec.height = to_int(key, value);
    } else if (key == "cell_size") {
      spec.cell_size = to_double(key, value);
    } else if (key == "origin_x") {
      spec.origin_x = to_double(key, value);
    } else if (key == "origin_y") {
      spec.origin_y = to_double(key, value);
    } else if (key == "ground_height") {
      spec.ground_height = to_double(key, value);
    } else if (key == "ground_intensity") {
      spec.ground_intensity = to_double(key, value);
    } else if (key == "intensity_noise") {
      spec.intensity_noise = to_double(key, value);
    } else if (key == "building") {
      std::vector<std::string> f;
      std::istringstream fs(value);
      std::string part;
      while (std::getline(fs, part, ',')) f.push_back(trim(part));
      if (f.size() != 6) {
        throw std::invalid_argument(
            "scene spec: building needs col,row,width,height,height_m,intensity");
      }
      spec.buildings.push_back({to_int(key, f[0]), to_int(key, f[1]), to_int(key, f[2]),
                                to_int(key, f[3]), to_double(key, f[4]), to_double(key, f[5])});
    } else {
      throw std::invalid_argument("scene spec: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

RpcModel make_view_model(double tilt_deg, double azimuth_deg, const GroundPoint& center,
                         double meters_per_u, double meters_per_v, double gsd_m) {
  const double deg = std::numbers::pi / 180.0;
  const double lean = std::tan(tilt_deg * deg);
  // Horizontal ground displacement of the ray per meter of height, in ground units.
  const double tu = lean * std::sin(azimuth_deg * deg) / meters_per_u;
  const double tv = lean * std::cos(azimuth_deg * deg) / meters_per_v;

  RpcModel m;
  m.u = {center.u, 1000.0 / meters_per_u};
  m.v = {center.v, 1000.0 / meters_per_v};
  m.z = {center.z, 500.0};
  const double s_scale = meters_per_u * m.u.scale / gsd_m;
  const double l_scale = meters_per_v * m.v.scale / gsd_m;
  m.s = {s_scale, s_scale};
  m.l = {l_scale, l_scale};
  m.den_s[0] = 1.0;
  m.den_l[0] = 1.0;
  m.num_s[1] = 1.0;
  m.num_s[3] = -tu * m.z.scale / m.u.scale;
  m.num_l[2] = -1.0;
  m.num_l[3] = tv * m.z.scale / m.v.scale;
  return m;
}

}  // namespace dsmfuse
