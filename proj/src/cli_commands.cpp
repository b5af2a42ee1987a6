#include "dsmfuse/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dsmfuse/fusion.hpp"
#include "dsmfuse/pairsel.hpp"
#include "dsmfuse/raster.hpp"
#include "dsmfuse/register.hpp"
#include "dsmfuse/rpc.hpp"
#include "dsmfuse/synth.hpp"

namespace dsmfuse::cli {

namespace fs = std::filesystem;

namespace {

class BadConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string with_extension(const std::string& path, const std::string& ext) {
  return fs::path(path).replace_extension(ext).string();
}

std::string manifest_path(const std::string& output) {
  return with_extension(output, ".manifest.json");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Records how an output was produced: enough to rerun the command.
class RunManifest {
 public:
  RunManifest(const std::string& command, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = command;
    doc_["args"] = std::vector<std::string>(args.begin() + 1, args.end());
    doc_["tool_version"] = kToolVersion;
    doc_["inputs"] = nlohmann::json::array();
    doc_["outputs"] = nlohmann::json::array();
  }

  void capture_options(const CLI::App& sub) {
    nlohmann::json cfg = nlohmann::json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        const auto res = opt->results();
        if (res.size() == 1) {
          cfg[name] = res.front();
        } else {
          cfg[name] = res;
        }
      } else {
        cfg[name] = opt->get_default_str();
      }
    }
    doc_["config"] = cfg;
  }

  void input(const std::string& p) { doc_["inputs"].push_back(p); }
  void output(const std::string& p) { doc_["outputs"].push_back(p); }
  void seed(std::uint64_t s) { doc_["seed"] = s; }

  void write(const std::string& path) {
    if (!doc_.contains("seed")) doc_["seed"] = nullptr;
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start_;
    doc_["wall_time_s"] = wall.count();
    write_file_atomic(path, doc_.dump(2) + "\n");
  }

 private:
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

// ---- option bundles ----

struct FusionFlags {
  double delta_s = 2.5;
  double delta_i = 15.0;
  double gamma = 0.5;
  int radius = 3;

  void add_to(CLI::App* sub) {
    sub->add_option("--delta-s", delta_s, "spatial Gaussian scale (cells)")->capture_default_str();
    sub->add_option("--delta-i", delta_i, "intensity Gaussian scale (gray levels)")
        ->capture_default_str();
    sub->add_option("--gamma", gamma, "window membership threshold")->capture_default_str();
    sub->add_option("--radius", radius, "search window half-width (cells)")->capture_default_str();
  }
  FusionConfig config() const {
    FusionConfig c{delta_s, delta_i, gamma, radius};
    c.validate();
    return c;
  }
};

struct AlignFlags {
  double threshold = 6.0;
  int max_search = 10;

  void add_to(CLI::App* sub) {
    sub->add_option("--threshold", threshold, "blunder threshold (m)")->capture_default_str();
    sub->add_option("--max-search", max_search, "coarse search radius (cells)")
        ->capture_default_str();
  }
  AlignConfig config(int jobs) const {
    if (!(threshold > 0.0)) throw std::invalid_argument("--threshold must be positive");
    if (max_search < 0) throw std::invalid_argument("--max-search must be non-negative");
    AlignConfig c;
    c.blunder_threshold = threshold;
    c.max_search = max_search;
    c.jobs = jobs;
    return c;
  }
};

struct FuseOpts {
  std::vector<std::string> layers;
  std::string ortho;
  std::string mode = "adaptive";
  std::string out;
  std::string target_grid;
  bool strict_geometry = false;
  int jobs = 0;
  FusionFlags fusion;
};

struct RankOpts {
  std::string manifest;
  std::string truth;
  std::string out;
  double min_angle = 10.0;
  double max_angle = 30.0;
  int top_k = 10;
  std::vector<double> at;
  double meters_per_unit = 111320.0;
  double dz_probe = 100.0;
  int jobs = 0;
  AlignFlags align;
};

struct EvalOpts {
  std::string dsm;
  std::string truth;
  std::string out;
  int jobs = 0;
  AlignFlags align;
};

struct CurveOpts {
  std::vector<std::string> layers;
  std::string ortho;
  std::string truth;
  std::string out;
  bool no_align = false;
  int jobs = 0;
  FusionFlags fusion;
  AlignFlags align;
};

struct RpcOpts {
  std::string mode;
  std::vector<std::string> rpc;
  double u = 0.0, v = 0.0, z = 0.0;
  double s = 0.0, l = 0.0;
  double bias_du = 0.0, bias_dv = 0.0, bias_dz = 0.0;
  double meters_per_unit = 111320.0;
  double dz_probe = 100.0;
};

struct SynthOpts {
  std::string scene;
  std::string out_dir;
  int layers = 5;
  double sigma_lo = 0.5;
  double sigma_hi = 0.5;
  double spike_prob = 0.0;
  double spike_amp = 10.0;
  double hole_prob = 0.0;
  std::uint64_t seed = 1;
};

void check_jobs(int jobs) {
  if (jobs < 0) throw std::invalid_argument("--jobs must be >= 0");
}

// ---- helpers ----

RasterGrid conform(const RasterGrid& g, const GridGeometry& target, bool strict,
                   const std::string& what) {
  if (g.geometry() == target) return g;
  if (strict) {
    throw GeometryMismatchError(what + " does not share the target geometry");
  }
  RasterGrid out = resample(g, target, ResampleMethod::Bilinear);
  if (g.valid_count() > 0 && out.valid_count() == 0) {
    throw GeometryMismatchError(what + " does not overlap the target geometry");
  }
  return out;
}

struct LoadedStack {
  std::vector<RasterGrid> layers;
  GridGeometry geometry;
};

LoadedStack load_stack(const std::vector<std::string>& paths, const std::string& target_grid,
                       bool strict, RunManifest& manifest) {
  LoadedStack out;
  std::vector<RasterGrid> raw;
  for (const auto& p : paths) {
    raw.push_back(read_asc(p));
    manifest.input(p);
  }
  if (!target_grid.empty()) {
    out.geometry = read_asc(target_grid).geometry();
    manifest.input(target_grid);
  } else {
    out.geometry = raw.front().geometry();
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.layers.push_back(conform(raw[i], out.geometry, strict, "layer '" + paths[i] + "'"));
  }
  return out;
}

RasterGrid load_ortho(const std::string& path, const GridGeometry& target, bool strict,
                      RunManifest& manifest) {
  manifest.input(path);
  return standardize_intensity(conform(read_asc(path), target, strict, "ortho '" + path + "'"));
}

// ---- commands ----

int cmd_fuse(const FuseOpts& o, const CLI::App& sub, const std::vector<std::string>& args,
             std::ostream& out, std::ostream& err) {
  if (o.mode != "median" && o.mode != "adaptive") {
    err << "fuse: --mode must be 'median' or 'adaptive'\n";
    return kBadConfig;
  }
  if (o.mode == "adaptive" && o.ortho.empty()) {
    err << "fuse: --ortho is required when --mode is adaptive\n";
    return kBadConfig;
  }
  check_jobs(o.jobs);
  const FusionConfig cfg = o.fusion.config();

  RunManifest manifest("fuse", args);
  manifest.capture_options(sub);
  LoadedStack loaded = load_stack(o.layers, o.target_grid, o.strict_geometry, manifest);
  DepthStack stack(std::move(loaded.layers), o.layers);
  RasterGrid fused;
  if (o.mode == "median") {
    fused = median_fuse(stack, o.jobs);
  } else {
    const RasterGrid ortho = load_ortho(o.ortho, loaded.geometry, o.strict_geometry, manifest);
    fused = adaptive_median_fuse(stack, ortho, cfg, o.jobs);
  }

  const std::string pgm = with_extension(o.out, ".pgm");
  const std::string mpath = manifest_path(o.out);
  write_asc(o.out, fused);
  write_pgm(pgm, fused);
  manifest.output(o.out);
  manifest.output(pgm);
  manifest.write(mpath);
  out << "fused " << stack.size() << " layer(s) with " << o.mode << " -> " << o.out << "\n";
  return kOk;
}

int cmd_eval(const EvalOpts& o, const CLI::App& sub, const std::vector<std::string>& args,
             std::ostream& out, std::ostream&) {
  check_jobs(o.jobs);
  const AlignConfig cfg = o.align.config(o.jobs);
  RunManifest manifest("eval", args);
  manifest.capture_options(sub);
  const RasterGrid dsm = read_asc(o.dsm);
  const RasterGrid truth = read_asc(o.truth);
  manifest.input(o.dsm);
  manifest.input(o.truth);

  const RasterGrid on_truth = resample(dsm, truth.geometry(), ResampleMethod::Nearest);
  const RmseResult raw = rmse(on_truth, truth, true, cfg.blunder_threshold);
  const AlignmentResult a = align(dsm, truth, cfg);

  std::string csv =
      "rmse_inliers_m,rmse_all_m,rmse_raw_m,dx_m,dy_m,dz_m,n_inliers,n_total,converged\n";
  csv += fmt("%.6f", a.rmse_inliers) + "," + fmt("%.6f", a.rmse_all) + "," +
         fmt("%.6f", raw.rmse) + "," + fmt("%.6f", a.dx) + "," + fmt("%.6f", a.dy) + "," +
         fmt("%.6f", a.dz) + "," + std::to_string(a.n_inliers) + "," +
         std::to_string(a.n_total) + "," + (a.converged ? "true" : "false") + "\n";
  write_file_atomic(o.out, csv);
  manifest.output(o.out);
  manifest.write(manifest_path(o.out));
  out << "rmse_all " << fmt("%.6f", a.rmse_all) << " m, rmse_inliers "
      << fmt("%.6f", a.rmse_inliers) << " m\n";
  return kOk;
}

int cmd_curve(const CurveOpts& o, const CLI::App& sub, const std::vector<std::string>& args,
              std::ostream& out, std::ostream&) {
  check_jobs(o.jobs);
  const FusionConfig fcfg = o.fusion.config();
  const AlignConfig acfg = o.align.config(o.jobs);
  RunManifest manifest("curve", args);
  manifest.capture_options(sub);
  LoadedStack loaded = load_stack(o.layers, "", false, manifest);
  const RasterGrid ortho = load_ortho(o.ortho, loaded.geometry, false, manifest);
  const RasterGrid truth = read_asc(o.truth);
  manifest.input(o.truth);

  auto score = [&](const RasterGrid& fused) {
    if (!o.no_align) return align(fused, truth, acfg).rmse_all;
    const RasterGrid on_truth = resample(fused, truth.geometry(), ResampleMethod::Nearest);
    return rmse(on_truth, truth, true, acfg.blunder_threshold).rmse;
  };

  std::string csv = "k,rmse_adaptive_m,rmse_median_m\n";
  for (std::size_t k = 1; k <= loaded.layers.size(); ++k) {
    DepthStack stack(std::vector<RasterGrid>(loaded.layers.begin(),
                                             loaded.layers.begin() + static_cast<std::ptrdiff_t>(k)));
    const double adaptive = score(adaptive_median_fuse(stack, ortho, fcfg, o.jobs));
    const double median = score(median_fuse(stack, o.jobs));
    csv += std::to_string(k) + "," + fmt("%.6f", adaptive) + "," + fmt("%.6f", median) + "\n";
  }
  write_file_atomic(o.out, csv);
  manifest.output(o.out);
  manifest.write(manifest_path(o.out));
  out << "wrote " << loaded.layers.size() << " curve rows -> " << o.out << "\n";
  return kOk;
}

int cmd_rank(const RankOpts& o, const CLI::App& sub, const std::vector<std::string>& args,
             std::ostream& out, std::ostream& err) {
  check_jobs(o.jobs);
  PairGate gate{o.min_angle, o.max_angle, o.top_k};
  gate.validate();
  const AlignConfig acfg = o.align.config(o.jobs);
  if (!(o.meters_per_unit > 0.0) || !(o.dz_probe > 0.0)) {
    throw std::invalid_argument("--meters-per-unit and --dz-probe must be positive");
  }
  if (!o.at.empty() && o.at.size() != 3) throw std::invalid_argument("--at takes U V Z");

  RunManifest manifest("rank", args);
  manifest.capture_options(sub);
  const std::vector<ManifestRow> rows = parse_pair_manifest(read_file(o.manifest));
  manifest.input(o.manifest);
  const fs::path base = fs::path(o.manifest).parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return (q.is_absolute() ? q : base / q).string();
  };
  const RasterGrid truth = read_asc(o.truth);
  manifest.input(o.truth);

  std::map<std::string, std::string> rpc_paths;
  for (const auto& r : rows) {
    rpc_paths.emplace(r.id_a, r.rpc_a_path);
    rpc_paths.emplace(r.id_b, r.rpc_b_path);
  }
  std::vector<NamedModel> models;
  for (const auto& [id, path] : rpc_paths) {
    models.push_back({id, read_rpc(resolve(path))});
    manifest.input(resolve(path));
  }

  GroundPoint at;
  if (o.at.size() == 3) {
    at = {o.at[0], o.at[1], o.at[2]};
  } else {
    const GridGeometry& g = truth.geometry();
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : truth.values()) {
      if (truth.valid(v)) {
        sum += v;
        ++n;
      }
    }
    at = {g.origin_x + 0.5 * g.n_cols * g.cell_size, g.origin_y + 0.5 * g.n_rows * g.cell_size,
          n ? sum / static_cast<double>(n) : 0.0};
  }
  RayOptions rays;
  rays.dz_probe = o.dz_probe;
  rays.meters_per_u = o.meters_per_unit;
  rays.meters_per_v = o.meters_per_unit;

  std::vector<PairRecord> ranked;
  if (models.size() >= 2) {
    const GateReport report = gate_pairs(models, at, gate, rays);
    for (const auto& why : report.dropped) err << "rank: dropped pair " << why << "\n";
    std::map<std::pair<std::string, std::string>, double> angles;
    for (const auto& k : report.kept) angles[{k.id_a, k.id_b}] = k.angle;

    std::vector<PairCandidate> candidates;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : rows) {
      auto key = std::minmax(r.id_a, r.id_b);
      const std::pair<std::string, std::string> canon{key.first, key.second};
      const auto it = angles.find(canon);
      if (it == angles.end() || !seen.insert(canon).second) continue;
      PairCandidate c;
      c.record.id_a = canon.first;
      c.record.id_b = canon.second;
      c.record.angle = it->second;
      c.record.dsm_path = resolve(r.dsm_path);
      c.dsm = read_asc(c.record.dsm_path);
      manifest.input(c.record.dsm_path);
      candidates.push_back(std::move(c));
    }
    ranked = rank_pairs(candidates, truth, acfg, gate);
  }
  if (ranked.empty()) {
    err << "rank: warning: no pair within [" << gate.min_angle << ", " << gate.max_angle
        << "] degrees; selection is empty\n";
  }

  std::string csv = "id_a,id_b,angle_deg,rank_rmse_m,selected\n";
  for (const auto& r : ranked) {
    csv += r.id_a + "," + r.id_b + "," + fmt("%.6f", r.angle) + "," +
           (r.rank_rmse ? fmt("%.6f", *r.rank_rmse) : std::string()) + "," +
           (r.selected ? "true" : "false") + "\n";
    if (r.insufficient_overlap) {
      err << "rank: pair " << r.id_a << "," << r.id_b << " does not overlap the truth patch\n";
    }
  }
  write_file_atomic(o.out, csv);
  manifest.output(o.out);
  manifest.write(manifest_path(o.out));
  const auto selected = std::count_if(ranked.begin(), ranked.end(),
                                      [](const PairRecord& r) { return r.selected; });
  out << "ranked " << ranked.size() << " pair(s), selected " << selected << "\n";
  return kOk;
}

int cmd_rpc(const RpcOpts& o, std::ostream& out, std::ostream& err) {
  if (o.mode == "angle") {
    if (o.rpc.size() != 2) {
      err << "rpc angle: needs exactly two --rpc files\n";
      return kBadConfig;
    }
  } else if (o.rpc.size() != 1) {
    err << "rpc " << o.mode << ": needs exactly one --rpc file\n";
    return kBadConfig;
  }
  std::vector<RpcModel> models;
  for (const auto& p : o.rpc) models.push_back(read_rpc(p));
  const RpcModel& m = models.front();
  const BiasedRpcModel biased = apply_bias(m, {o.bias_du, o.bias_dv, o.bias_dz});

  if (o.mode == "project") {
    const Projection plain = m.project_checked({o.u, o.v, o.z});
    const ImagePoint p = biased.project({o.u, o.v, o.z});
    out << "s=" << fmt("%.9f", p.s) << " l=" << fmt("%.9f", p.l)
        << " in_domain=" << (plain.in_domain ? 1 : 0) << "\n";
  } else if (o.mode == "invert") {
    const GroundPoint g = biased.invert({o.s, o.l}, o.z);
    out << "u=" << fmt("%.12f", g.u) << " v=" << fmt("%.12f", g.v) << " z=" << fmt("%.6f", g.z)
        << "\n";
  } else {
    RayOptions rays;
    rays.dz_probe = o.dz_probe;
    rays.meters_per_u = o.meters_per_unit;
    rays.meters_per_v = o.meters_per_unit;
    out << "angle_deg=" << fmt("%.9f", intersection_angle(models[0], models[1], {o.u, o.v, o.z}, rays))
        << "\n";
  }
  return kOk;
}

int cmd_synth(const SynthOpts& o, const CLI::App& sub, const std::vector<std::string>& args,
              std::ostream& out) {
  if (o.layers < 1) throw std::invalid_argument("--layers must be >= 1");
  const std::vector<double> sigmas = quality_ladder(o.layers, o.sigma_lo, o.sigma_hi);
  RunManifest manifest("synth", args);
  manifest.capture_options(sub);
  manifest.seed(o.seed);
  const SceneSpec spec = parse_scene_spec(read_file(o.scene));
  manifest.input(o.scene);
  const Scene scene = gen_scene(spec);

  std::vector<std::pair<std::string, RasterGrid>> outputs;
  outputs.emplace_back("truth.asc", scene.truth);
  outputs.emplace_back("ortho.asc", scene.ortho);
  for (int i = 0; i < o.layers; ++i) {
    DegradeSpec d;
    d.seed = o.seed + static_cast<std::uint64_t>(i);
    d.gaussian_sigma = sigmas[static_cast<std::size_t>(i)];
    d.spike_prob = o.spike_prob;
    d.spike_amp = o.spike_amp;
    d.hole_prob = o.hole_prob;
    char name[32];
    std::snprintf(name, sizeof name, "layer_%02d.asc", i + 1);
    outputs.emplace_back(name, degrade(scene.truth, d));
  }
  fs::create_directories(o.out_dir);
  for (const auto& [name, grid] : outputs) {
    const std::string p = (fs::path(o.out_dir) / name).string();
    write_asc(p, grid);
    manifest.output(p);
  }
  const std::string preview = (fs::path(o.out_dir) / "truth.pgm").string();
  write_pgm(preview, scene.truth);
  manifest.output(preview);
  manifest.write((fs::path(o.out_dir) / "synth.manifest.json").string());
  out << "wrote truth, ortho and " << o.layers << " layer(s) to " << o.out_dir << "\n";
  return kOk;
}

// Turns `key = value` lines of a --config file into flags placed ahead of the
// user's own, skipping any flag the user also passed.
std::vector<std::string> expand_config(const CLI::App& app, const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[1]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string config;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (config.empty()) return args;

  std::set<std::string> given;
  for (std::size_t i = 2; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  }
  std::vector<std::string> injected;
  std::istringstream in(read_file(config));
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw BadConfig("config: expected key=value, got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt || key == "config") throw BadConfig("config: unknown key '" + key + "'");
    if (given.count(flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value == "yes") {
        injected.push_back(flag);
      } else if (value != "false" && value != "0" && value != "no") {
        throw BadConfig("config: '" + key + "' expects true or false");
      }
      continue;
    }
    injected.push_back(flag);
    injected.push_back(value);
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Depth-map fusion, registration and evaluation for satellite DSMs", "dsmfuse"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  FuseOpts fuse;
  CLI::App* fuse_cmd = app.add_subcommand("fuse", "fuse a stack of depth grids into one DSM");
  fuse_cmd->add_option("--layer", fuse.layers, "height grid (repeatable)")->required();
  fuse_cmd->add_option("--ortho", fuse.ortho, "reference intensity grid");
  fuse_cmd->add_option("--mode", fuse.mode, "median or adaptive")->capture_default_str();
  fuse_cmd->add_option("--out", fuse.out, "output ASCII grid")->required();
  fuse_cmd->add_option("--target-grid", fuse.target_grid, "grid whose geometry the output uses");
  fuse_cmd->add_flag("--strict-geometry", fuse.strict_geometry, "fail instead of resampling");
  fuse_cmd->add_option("--jobs", fuse.jobs, "worker threads (0: all)")->capture_default_str();
  fuse.fusion.add_to(fuse_cmd);

  RankOpts rank;
  CLI::App* rank_cmd = app.add_subcommand("rank", "gate and rank stereo pairs against truth");
  rank_cmd->add_option("--manifest", rank.manifest, "pair manifest CSV")->required();
  rank_cmd->add_option("--truth", rank.truth, "truth DSM patch")->required();
  rank_cmd->add_option("--out", rank.out, "ranked CSV")->required();
  rank_cmd->add_option("--min-angle", rank.min_angle, "degrees")->capture_default_str();
  rank_cmd->add_option("--max-angle", rank.max_angle, "degrees")->capture_default_str();
  rank_cmd->add_option("--top-k", rank.top_k, "pairs to select")->capture_default_str();
  rank_cmd->add_option("--at", rank.at, "ground point U V Z for the angle (default: patch center)")
      ->expected(3);
  rank_cmd->add_option("--meters-per-unit", rank.meters_per_unit, "ground units to meters")
      ->capture_default_str();
  rank_cmd->add_option("--dz-probe", rank.dz_probe, "ray probe height (m)")->capture_default_str();
  rank_cmd->add_option("--jobs", rank.jobs, "worker threads (0: all)")->capture_default_str();
  rank.align.add_to(rank_cmd);

  EvalOpts eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "align a DSM to truth and report RMSE");
  eval_cmd->add_option("--dsm", eval.dsm, "computed DSM")->required();
  eval_cmd->add_option("--truth", eval.truth, "truth DSM")->required();
  eval_cmd->add_option("--out", eval.out, "metrics CSV")->required();
  eval_cmd->add_option("--jobs", eval.jobs, "worker threads (0: all)")->capture_default_str();
  eval.align.add_to(eval_cmd);

  CurveOpts curve;
  CLI::App* curve_cmd =
      app.add_subcommand("curve", "RMSE versus number of fused layers, both methods");
  curve_cmd->add_option("--layer", curve.layers, "height grid in rank order (repeatable)")
      ->required();
  curve_cmd->add_option("--ortho", curve.ortho, "reference intensity grid")->required();
  curve_cmd->add_option("--truth", curve.truth, "truth DSM")->required();
  curve_cmd->add_option("--out", curve.out, "curve CSV")->required();
  curve_cmd->add_flag("--no-align", curve.no_align, "score without alignment");
  curve_cmd->add_option("--jobs", curve.jobs, "worker threads (0: all)")->capture_default_str();
  curve.fusion.add_to(curve_cmd);
  curve.align.add_to(curve_cmd);

  RpcOpts rpc;
  CLI::App* rpc_cmd = app.add_subcommand("rpc", "RPC projection, inversion and ray angles");
  rpc_cmd->add_option("mode", rpc.mode, "project, invert or angle")
      ->required()
      ->check(CLI::IsMember({"project", "invert", "angle"}));
  rpc_cmd->add_option("--rpc", rpc.rpc, "RPC text file (repeatable)")->required();
  rpc_cmd->add_option("--u", rpc.u, "ground U");
  rpc_cmd->add_option("--v", rpc.v, "ground V");
  rpc_cmd->add_option("--z", rpc.z, "height (m)");
  rpc_cmd->add_option("--s", rpc.s, "image sample");
  rpc_cmd->add_option("--l", rpc.l, "image line");
  rpc_cmd->add_option("--bias-du", rpc.bias_du, "object-space shift U");
  rpc_cmd->add_option("--bias-dv", rpc.bias_dv, "object-space shift V");
  rpc_cmd->add_option("--bias-dz", rpc.bias_dz, "object-space shift Z");
  rpc_cmd->add_option("--meters-per-unit", rpc.meters_per_unit, "ground units to meters")
      ->capture_default_str();
  rpc_cmd->add_option("--dz-probe", rpc.dz_probe, "ray probe height (m)")->capture_default_str();

  SynthOpts synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene and depth layers");
  synth_cmd->add_option("--scene", synth.scene, "scene spec file")->required();
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--layers", synth.layers, "number of degraded layers")
      ->capture_default_str();
  synth_cmd->add_option("--sigma-lo", synth.sigma_lo, "noise sigma of the first layer (m)")
      ->capture_default_str();
  synth_cmd->add_option("--sigma-hi", synth.sigma_hi, "noise sigma of the last layer (m)")
      ->capture_default_str();
  synth_cmd->add_option("--spike-prob", synth.spike_prob)->capture_default_str();
  synth_cmd->add_option("--spike-amp", synth.spike_amp)->capture_default_str();
  synth_cmd->add_option("--hole-prob", synth.hole_prob)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "layer i uses seed + i")->capture_default_str();

  for (CLI::App* sub : {fuse_cmd, rank_cmd, eval_cmd, curve_cmd, rpc_cmd, synth_cmd}) {
    sub->add_option("--config", "key=value file mirroring the flags; flags win");
  }

  try {
    std::vector<std::string> argv = expand_config(app, args);
    std::vector<std::string> reversed(argv.rbegin(), argv.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kBadConfig;
  } catch (const BadConfig& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kBadConfig;
  } catch (const RasterIoError& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kIoError;
  }

  try {
    if (*fuse_cmd) return cmd_fuse(fuse, *fuse_cmd, args, out, err);
    if (*rank_cmd) return cmd_rank(rank, *rank_cmd, args, out, err);
    if (*eval_cmd) return cmd_eval(eval, *eval_cmd, args, out, err);
    if (*curve_cmd) return cmd_curve(curve, *curve_cmd, args, out, err);
    if (*rpc_cmd) return cmd_rpc(rpc, out, err);
    if (*synth_cmd) return cmd_synth(synth, *synth_cmd, args, out);
  } catch (const RasterIoError& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kIoError;
  } catch (const RpcFileError& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kIoError;
  } catch (const ManifestError& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kIoError;
  } catch (const GeometryMismatchError& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kGeometryMismatch;
  } catch (const InsufficientOverlapError& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kGeometryMismatch;
  } catch (const std::invalid_argument& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::exception& e) {
    err << "dsmfuse: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace dsmfuse::cli
