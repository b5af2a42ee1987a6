#include <cmath>
#include <vector>

#include "dsmfuse/fusion.hpp"
#include "parallel.hpp"

namespace dsmfuse {

namespace {

struct Offset {
  int dc;
  int dr;
  double spatial;  // |offset|^2 / (2 ds^2), the same expression weight() evaluates
};

// Offsets of the square window in row-major order. With `prune`, offsets
// whose spatial term alone cannot beat gamma are dropped: the color term
// only lowers W.
std::vector<Offset> window_offsets(int radius, double delta_s, double gamma, bool prune) {
  std::vector<Offset> out;
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      const double fc = dc;
      const double fr = dr;
      const double spatial = (fc * fc + fr * fr) / (2.0 * delta_s * delta_s);
      const bool center = dc == 0 && dr == 0;
      if (prune && !center && !(std::exp(-spatial) > gamma)) continue;
      out.push_back({dc, dr, spatial});
    }
  }
  return out;
}

struct PoolingPlan {
  std::vector<Offset> offsets;
  const RasterGrid* ortho = nullptr;  // null: no intensity gating
  double gamma = 0.0;
  double color_denominator = 1.0;     // 2 dI^2
};

RasterGrid pooled_median(const DepthStack& stack, const PoolingPlan& plan, int jobs) {
  const GridGeometry& g = stack.geometry();
  RasterGrid out(g, stack.nodata(), stack.nodata());
  const int cols = g.n_cols;
  const int rows = g.n_rows;
  const auto& layers = stack.layers();
  std::vector<const double*> data;
  for (const auto& l : layers) data.push_back(l.values().data());
  double* dst = out.values().data();
  const double* intensity = plan.ortho ? plan.ortho->values().data() : nullptr;

#pragma omp parallel num_threads(detail::resolve_jobs(jobs))
  {
    std::vector<double> candidates;
    candidates.reserve(plan.offsets.size() * layers.size());
#pragma omp for schedule(static)
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const std::size_t center = static_cast<std::size_t>(r) * cols + c;
        bool gated = false;
        double i0 = 0.0;
        if (intensity) {
          i0 = intensity[center];
          gated = plan.ortho->valid(i0);
        }
        candidates.clear();
        for (const Offset& o : plan.offsets) {
          const int cc = c + o.dc;
          const int rr = r + o.dr;
          if (cc < 0 || rr < 0 || cc >= cols || rr >= rows) continue;
          const std::size_t idx = static_cast<std::size_t>(rr) * cols + cc;
          if (intensity && (o.dc != 0 || o.dr != 0)) {
            if (gated) {
              const double ix = intensity[idx];
              if (!plan.ortho->valid(ix)) continue;
              const double di = ix - i0;
              const double color = di * di / plan.color_denominator;
              if (!(std::exp(-o.spatial - color) > plan.gamma)) continue;
            }
            // Ungated offsets already passed the spatial-only test when pruned.
          }
          for (std::size_t k = 0; k < layers.size(); ++k) {
            const double v = data[k][idx];
            if (layers[k].valid(v)) candidates.push_back(v);
          }
        }
        if (!candidates.empty()) dst[center] = median_in_place(candidates);
      }
    }
  }
  return out;
}

}  // namespace

RasterGrid median_fuse(const DepthStack& stack, int jobs) {
  PoolingPlan plan;
  plan.offsets = {{0, 0, 0.0}};
  return pooled_median(stack, plan, jobs);
}

RasterGrid adaptive_median_fuse(const DepthStack& stack, const RasterGrid& ortho,
                                const FusionConfig& cfg, int jobs) {
  cfg.validate();
  if (!(ortho.geometry() == stack.geometry())) {
    throw GeometryMismatchError("adaptive fusion: ortho does not share the stack geometry");
  }
  PoolingPlan plan;
  plan.offsets = window_offsets(cfg.radius, cfg.delta_s, cfg.gamma, true);
  plan.ortho = &ortho;
  plan.gamma = cfg.gamma;
  plan.color_denominator = 2.0 * cfg.delta_i * cfg.delta_i;
  return pooled_median(stack, plan, jobs);
}

RasterGrid box_median_fuse(const DepthStack& stack, int radius, int jobs) {
  if (radius < 0) throw std::invalid_argument("box median: radius must be non-negative");
  PoolingPlan plan;
  plan.offsets = window_offsets(radius, 1.0, 0.0, false);
  return pooled_median(stack, plan, jobs);
}

}  // namespace dsmfuse
