#include <vector>

#include "dsmfuse/fusion.hpp"

namespace dsmfuse::reference {

RasterGrid median_fuse(const DepthStack& stack) {
  RasterGrid out(stack.geometry(), stack.nodata(), stack.nodata());
  std::vector<double> candidates;
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) {
      candidates.clear();
      for (const auto& layer : stack.layers()) {
        if (layer.valid_at(c, r)) candidates.push_back(layer.at(c, r));
      }
      if (!candidates.empty()) out.at(c, r) = median_in_place(candidates);
    }
  }
  return out;
}

RasterGrid adaptive_median_fuse(const DepthStack& stack, const RasterGrid& ortho,
                                const FusionConfig& cfg) {
  cfg.validate();
  if (!(ortho.geometry() == stack.geometry())) {
    throw GeometryMismatchError("adaptive fusion: ortho does not share the stack geometry");
  }
  RasterGrid out(stack.geometry(), stack.nodata(), stack.nodata());
  std::vector<double> candidates;
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) {
      candidates.clear();
      for (const CellIndex m : adaptive_window(ortho, {c, r}, cfg).members) {
        for (const auto& layer : stack.layers()) {
          if (layer.valid_at(m.col, m.row)) candidates.push_back(layer.at(m));
        }
      }
      if (!candidates.empty()) out.at(c, r) = median_in_place(candidates);
    }
  }
  return out;
}

}  // namespace dsmfuse::reference
