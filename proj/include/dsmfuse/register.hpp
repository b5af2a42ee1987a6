#pragma once

#include <cstddef>
#include <stdexcept>

#include "dsmfuse/raster.hpp"

namespace dsmfuse {

struct AlignConfig {
  double blunder_threshold = 6.0;  // meters
  int max_search = 10;             // cells, coarse integer search radius
  int max_iterations = 50;
  double convergence_tol = 1e-4;   // cells
  int jobs = 0;                    // 0: OpenMP default
};

// The moving surface is modeled as the reference displaced by (dx, dy, dz):
//   moving(x, y) ~ reference(x - dx, y - dy) + dz
struct AlignmentResult {
  double dx = 0.0;  // meters
  double dy = 0.0;  // meters
  double dz = 0.0;  // meters
  double rmse_inliers = 0.0;
  double rmse_all = 0.0;
  std::size_t n_inliers = 0;
  std::size_t n_total = 0;
  bool converged = false;
};

class InsufficientOverlapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMinOverlapCells = 100;

// Translation-only least-squares alignment. Cells whose dz-corrected height
// difference exceeds the blunder threshold are left out of the fit; the
// inlier set is recomputed on every iteration. rmse_all is taken over every
// mutually valid cell at the final shift, blunders included.
AlignmentResult align(const RasterGrid& moving, const RasterGrid& reference,
                      const AlignConfig& cfg = {});

struct RmseResult {
  double rmse = 0.0;
  std::size_t count = 0;
};

// RMS of (a - b) over mutually valid cells of two grids on a common geometry.
RmseResult rmse(const RasterGrid& a, const RasterGrid& b, bool include_blunders,
                double threshold = 6.0);

}  // namespace dsmfuse
