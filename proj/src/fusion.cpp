#include "dsmfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsmfuse {

DepthStack::DepthStack(std::vector<RasterGrid> layers, std::vector<std::string> ids)
    : layers_(std::move(layers)), ids_(std::move(ids)) {
  if (layers_.empty()) throw std::invalid_argument("depth stack needs at least one layer");
  for (const auto& l : layers_) {
    if (!(l.geometry() == layers_.front().geometry())) {
      throw GeometryMismatchError("depth stack layers must share one geometry");
    }
  }
  if (ids_.empty()) {
    for (std::size_t i = 0; i < layers_.size(); ++i) ids_.push_back("layer" + std::to_string(i));
  }
  if (ids_.size() != layers_.size()) {
    throw std::invalid_argument("depth stack: one id per layer");
  }
}

void FusionConfig::validate() const {
  if (!(delta_s > 0.0) || !std::isfinite(delta_s)) {
    throw std::invalid_argument("fusion: delta_s must be positive");
  }
  if (!(delta_i > 0.0) || !std::isfinite(delta_i)) {
    throw std::invalid_argument("fusion: delta_i must be positive");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("fusion: gamma must be in (0, 1]");
  if (radius < 0) throw std::invalid_argument("fusion: radius must be non-negative");
}

double weight(const WeightKernel& kernel, CellIndex x, double intensity_at_x,
              const FusionConfig& cfg) {
  const double dc = x.col - kernel.center.col;
  const double dr = x.row - kernel.center.row;
  const double spatial = (dc * dc + dr * dr) / (2.0 * cfg.delta_s * cfg.delta_s);
  double color = 0.0;
  if (kernel.center_intensity) {
    const double di = intensity_at_x - *kernel.center_intensity;
    color = di * di / (2.0 * cfg.delta_i * cfg.delta_i);
  }
  return std::exp(-spatial - color);
}

AdaptiveWindow adaptive_window(const RasterGrid& ortho, CellIndex center, const FusionConfig& cfg) {
  AdaptiveWindow w;
  if (!ortho.in_bounds(center.col, center.row)) {
    throw std::out_of_range("adaptive_window: center outside the grid");
  }
  const double i0 = ortho.at(center);
  WeightKernel kernel{center, std::nullopt};
  if (ortho.valid(i0)) kernel.center_intensity = i0;

  for (int r = center.row - cfg.radius; r <= center.row + cfg.radius; ++r) {
    for (int c = center.col - cfg.radius; c <= center.col + cfg.radius; ++c) {
      if (!ortho.in_bounds(c, r)) continue;
      const CellIndex x{c, r};
      if (x == center) {
        w.members.push_back(x);
        continue;
      }
      const double ix = ortho.at(c, r);
      if (kernel.center_intensity && !ortho.valid(ix)) continue;
      if (weight(kernel, x, ix, cfg) > cfg.gamma) w.members.push_back(x);
    }
  }
  return w;
}

double median_in_place(std::span<double> values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (n % 2) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace dsmfuse
