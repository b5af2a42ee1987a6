#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dsmfuse/raster.hpp"
#include "dsmfuse/rpc.hpp"

namespace dsmfuse {

// Independent mt19937_64 stream per (seed, purpose). Uniform and normal
// variates are derived here rather than through <random> distributions so
// sequences are identical across standard libraries.
class SeededStream {
 public:
  SeededStream(std::uint64_t seed, std::uint32_t purpose);

  double uniform();  // [0, 1)
  double normal();   // standard normal, Box-Muller
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

enum class StreamPurpose : std::uint32_t {
  Noise = 1,
  Spikes = 2,
  Holes = 3,
  Intensity = 4,
  Layout = 5,
};

struct Building {
  int col = 0;  // footprint top-left, cells from the top-left grid corner
  int row = 0;
  int width = 1;
  int height = 1;
  double height_m = 0.0;
  double intensity = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  double cell_size = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double ground_height = 0.0;
  double ground_intensity = 100.0;
  double intensity_noise = 0.0;  // gray levels, seeded texture on the ortho
  std::vector<Building> buildings;

  void validate() const;
  GridGeometry geometry() const;
};

struct Scene {
  RasterGrid truth;
  RasterGrid ortho;
};

// Ground plane with building prisms stamped in list order; where footprints
// overlap the later building wins.
Scene gen_scene(const SceneSpec& spec);

struct DegradeSpec {
  std::uint64_t seed = 0;
  double gaussian_sigma = 0.0;
  double spike_prob = 0.0;
  double spike_amp = 0.0;
  double hole_prob = 0.0;

  void validate() const;
};

// Gaussian noise on every valid cell, then a spike_prob fraction replaced by
// truth +/- spike_amp, then a hole_prob fraction set to nodata.
RasterGrid degrade(const RasterGrid& truth, const DegradeSpec& spec);

// n sigmas rising geometrically from lo to hi (n == 1 gives lo).
std::vector<double> quality_ladder(int n, double lo, double hi);

// Parses `key = value` lines; `building = col,row,width,height,height_m,intensity`
// may repeat. Unknown keys are errors.
SceneSpec parse_scene_spec(const std::string& text);

// Affine sensor whose viewing ray leans `tilt_deg` off nadir toward azimuth
// `azimuth_deg` (clockwise from +v). Ground units convert to meters through
// meters_per_u / meters_per_v.
RpcModel make_view_model(double tilt_deg, double azimuth_deg, const GroundPoint& center,
                         double meters_per_u = 1.0, double meters_per_v = 1.0,
                         double gsd_m = 0.5);

}  // namespace dsmfuse
