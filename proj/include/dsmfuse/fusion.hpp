#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsmfuse/raster.hpp"

namespace dsmfuse {

// Co-registered height layers sharing one geometry.
class DepthStack {
 public:
  DepthStack(std::vector<RasterGrid> layers, std::vector<std::string> ids = {});

  const std::vector<RasterGrid>& layers() const { return layers_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const GridGeometry& geometry() const { return layers_.front().geometry(); }
  std::size_t size() const { return layers_.size(); }
  double nodata() const { return layers_.front().nodata(); }

 private:
  std::vector<RasterGrid> layers_;
  std::vector<std::string> ids_;
};

struct FusionConfig {
  double delta_s = 2.5;   // cells, spatial Gaussian scale
  double delta_i = 15.0;  // gray levels on a 0..255 scale
  double gamma = 0.5;     // window membership threshold, W > gamma
  int radius = 3;         // half-width of the square search window

  // Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
};

// Evaluation context for the bilateral weight around one output cell. An
// absent center intensity drops the color term entirely.
struct WeightKernel {
  CellIndex center;
  std::optional<double> center_intensity;
};

// W(x) = exp(-|x - x0|^2 / (2 ds^2) - |I - I0|^2 / (2 dI^2)), distances in cells.
// Equals 1 at the center, so no further normalization is applied.
double weight(const WeightKernel& kernel, CellIndex x, double intensity_at_x,
              const FusionConfig& cfg);

struct AdaptiveWindow {
  std::vector<CellIndex> members;  // row-major order within the square
};

// Cells of the (2r+1)^2 square whose weight strictly exceeds gamma. Cells
// with nodata intensity are skipped unless the center itself is nodata, in
// which case membership is decided by the spatial term alone. The center is
// always a member.
AdaptiveWindow adaptive_window(const RasterGrid& ortho, CellIndex center, const FusionConfig& cfg);

// Median of the values; an even count averages the two middle values. The
// span is reordered. Empty input is a precondition violation.
double median_in_place(std::span<double> values);

// Per-cell median over layers. Cells with no valid layer become nodata.
RasterGrid median_fuse(const DepthStack& stack, int jobs = 0);

// Median over every valid height of every layer at every member of the
// cell's adaptive window. `ortho` must share the stack geometry.
RasterGrid adaptive_median_fuse(const DepthStack& stack, const RasterGrid& ortho,
                                const FusionConfig& cfg, int jobs = 0);

// Plain square-window median with the same candidate pooling but no
// intensity gating.
RasterGrid box_median_fuse(const DepthStack& stack, int radius, int jobs = 0);

namespace reference {

// Straightforward serial versions kept as the baseline for tests and benchmarks.
RasterGrid median_fuse(const DepthStack& stack);
RasterGrid adaptive_median_fuse(const DepthStack& stack, const RasterGrid& ortho,
                                const FusionConfig& cfg);

}  // namespace reference

}  // namespace dsmfuse
