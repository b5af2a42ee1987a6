#pragma once

// On-disk datasets shared by the CLI tests and the acceptance runner.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "dsmfuse/raster.hpp"
#include "dsmfuse/rpc.hpp"
#include "dsmfuse/synth.hpp"

namespace fixtures {

using namespace dsmfuse;

// Smooth textured terrain on an n x n grid of 1 m cells.
inline RasterGrid terrain(int n) {
  RasterGrid g({0.0, 0.0, 1.0, n, n}, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      g.at(c, r) = 15.0 + 10.0 * std::sin(c / 6.0) * std::cos(r / 8.0) + 0.08 * c - 0.05 * r;
    }
  }
  return g;
}

struct RankSet {
  std::string manifest;
  std::string truth;
  std::vector<std::string> ids;  // image paired with the nadir view, in sigma order
};

// A nadir image "n00" paired with `sigmas.size()` images leaning `tilt_deg`
// at evenly spread azimuths. Pair DSM i is the truth plus noise sigmas[i]
// and a vertical offset, so ranking must follow the sigmas.
inline RankSet write_rank_set(const std::filesystem::path& dir, const std::vector<double>& sigmas,
                              double tilt_deg, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "rpc");
  fs::create_directories(dir / "dsm");
  const int n = 48;
  const RasterGrid truth = terrain(n);
  double mean = 0.0;
  for (double v : truth.values()) mean += v;
  mean /= static_cast<double>(truth.size());
  const GroundPoint at{0.5 * n, 0.5 * n, mean};

  RankSet set;
  set.truth = (dir / "truth.asc").string();
  write_asc(set.truth, truth);
  write_rpc((dir / "rpc" / "n00.rpc").string(), make_view_model(0.0, 0.0, at));
  std::string csv = "id_a,id_b,rpc_a_path,rpc_b_path,dsm_path\n";
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "t%02zu", i + 1);
    const double az = 360.0 * static_cast<double>(i) / static_cast<double>(sigmas.size());
    write_rpc((dir / "rpc" / (std::string(id) + ".rpc")).string(), make_view_model(tilt_deg, az, at));
    DegradeSpec d;
    d.seed = seed * 1000 + i;
    d.gaussian_sigma = sigmas[i];
    RasterGrid dsm = degrade(truth, d);
    for (double& v : dsm.values()) v += 0.25 * static_cast<double>(i % 3);
    const std::string dsm_rel = "dsm/n00_" + std::string(id) + ".asc";
    write_asc((dir / dsm_rel).string(), dsm);
    csv += "n00," + std::string(id) + ",rpc/n00.rpc,rpc/" + id + ".rpc," + dsm_rel + "\n";
    set.ids.push_back(id);
  }
  set.manifest = (dir / "pairs.csv").string();
  write_file_atomic(set.manifest, csv);
  return set;
}

// Scene with one flat-roofed rectangular building on textured ground.
inline SceneSpec building_scene(std::uint64_t seed, int size = 64) {
  SceneSpec s;
  s.seed = seed;
  s.width = size;
  s.height = size;
  s.ground_height = 0.0;
  s.ground_intensity = 90.0;
  s.intensity_noise = 2.0;
  const int w = size / 3;
  s.buildings = {{size / 2 - w / 2, size / 2 - w / 2, w, w + 4, 20.0, 210.0}};
  return s;
}

}  // namespace fixtures
