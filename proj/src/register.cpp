#include "dsmfuse/register.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "parallel.hpp"

namespace dsmfuse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kCoarseSampleTarget = 20000;

struct RefCell {
  double x;
  double y;
  double h;
};

std::vector<RefCell> valid_cells(const RasterGrid& g) {
  std::vector<RefCell> out;
  out.reserve(g.valid_count());
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      const double h = g.at(c, r);
      if (!g.valid(h)) continue;
      const WorldPoint p = cell_center(g.geometry(), {c, r});
      out.push_back({p.x, p.y, h});
    }
  }
  return out;
}

// d = moving(p + shift) - reference(p); NaN where the moving sample is unavailable.
struct Samples {
  std::vector<double> d;
  std::vector<double> gx;
  std::vector<double> gy;
};

Samples sample_diffs(const RasterGrid& moving, const std::vector<RefCell>& cells, double dx,
                     double dy, bool gradients, int jobs) {
  const std::size_t n = cells.size();
  Samples s;
  s.d.assign(n, kNaN);
  if (gradients) {
    s.gx.assign(n, kNaN);
    s.gy.assign(n, kNaN);
  }
  const double h = moving.geometry().cell_size;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for num_threads(jobs) schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const RefCell& c = cells[static_cast<std::size_t>(i)];
    const double x = c.x + dx;
    const double y = c.y + dy;
    const auto m = sample_bilinear(moving, x, y);
    if (!m) continue;
    if (gradients) {
      const auto xp = sample_bilinear(moving, x + h, y);
      const auto xm = sample_bilinear(moving, x - h, y);
      const auto yp = sample_bilinear(moving, x, y + h);
      const auto ym = sample_bilinear(moving, x, y - h);
      if (!xp || !xm || !yp || !ym) continue;
      s.gx[static_cast<std::size_t>(i)] = (*xp - *xm) / (2.0 * h);
      s.gy[static_cast<std::size_t>(i)] = (*yp - *ym) / (2.0 * h);
    }
    s.d[static_cast<std::size_t>(i)] = *m - c.h;
  }
  return s;
}

struct DzFit {
  double dz = 0.0;
  std::vector<char> inlier;
  std::size_t n_valid = 0;
  std::size_t n_inliers = 0;
};

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// Closed-form vertical offset: mean of inlier differences, with the inlier
// set re-derived from the current offset until it stops changing.
DzFit fit_dz(const std::vector<double>& d, double start, double threshold) {
  DzFit fit;
  fit.inlier.assign(d.size(), 0);
  std::vector<double> valid;
  valid.reserve(d.size());
  for (double v : d) {
    if (!std::isnan(v)) valid.push_back(v);
  }
  fit.n_valid = valid.size();
  if (valid.empty()) return fit;
  fit.dz = std::isnan(start) ? median_of(valid) : start;

  std::vector<char> mask(d.size(), 0);
  std::vector<double> picked;
  picked.reserve(valid.size());
  for (int iter = 0; iter < 50; ++iter) {
    picked.clear();
    for (std::size_t i = 0; i < d.size(); ++i) {
      mask[i] = !std::isnan(d[i]) && std::abs(d[i] - fit.dz) <= threshold;
      if (mask[i]) picked.push_back(d[i]);
    }
    if (picked.empty()) break;
    const bool stable = iter > 0 && mask == fit.inlier;
    fit.inlier = mask;
    fit.n_inliers = picked.size();
    fit.dz = detail::pairwise_sum(picked) / static_cast<double>(picked.size());
    if (stable) break;
  }
  return fit;
}

struct Residuals {
  double rmse_inliers = 0.0;
  double rmse_all = 0.0;
};

Residuals residual_rms(const std::vector<double>& d, const DzFit& fit) {
  std::vector<double> in_sq, all_sq;
  in_sq.reserve(fit.n_inliers);
  all_sq.reserve(fit.n_valid);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::isnan(d[i])) continue;
    const double r = d[i] - fit.dz;
    all_sq.push_back(r * r);
    if (fit.inlier[i]) in_sq.push_back(r * r);
  }
  Residuals out;
  if (!in_sq.empty()) {
    out.rmse_inliers = std::sqrt(detail::pairwise_sum(in_sq) / static_cast<double>(in_sq.size()));
  }
  if (!all_sq.empty()) {
    out.rmse_all = std::sqrt(detail::pairwise_sum(all_sq) / static_cast<double>(all_sq.size()));
  }
  return out;
}

// Mean of min(r^2, T^2) over every valid sample. Gated cells still cost T^2,
// so a shift cannot score well by pushing structure out of the inlier set.
double truncated_cost(const std::vector<double>& d, const DzFit& fit, double threshold) {
  std::vector<double> terms;
  terms.reserve(fit.n_valid);
  const double cap = threshold * threshold;
  for (double v : d) {
    if (std::isnan(v)) continue;
    const double r = v - fit.dz;
    terms.push_back(std::min(r * r, cap));
  }
  return terms.empty() ? std::numeric_limits<double>::infinity()
                       : detail::pairwise_sum(terms) / static_cast<double>(terms.size());
}

// Solves a symmetric 3x3 system by Gaussian elimination with partial pivoting.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
            std::array<double, 3>& x) {
  double scale = 0.0;
  for (const auto& row : a) {
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  if (!(scale > 0.0)) return false;
  for (int k = 0; k < 3; ++k) {
    int piv = k;
    for (int i = k + 1; i < 3; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    }
    if (std::abs(a[piv][k]) < 1e-12 * scale) return false;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (int i = k + 1; i < 3; ++i) {
      const double f = a[i][k] / a[k][k];
      for (int j = k; j < 3; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  for (int k = 2; k >= 0; --k) {
    double s = b[k];
    for (int j = k + 1; j < 3; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return true;
}

}  // namespace

AlignmentResult align(const RasterGrid& moving, const RasterGrid& reference,
                      const AlignConfig& cfg) {
  if (!(cfg.blunder_threshold > 0.0)) {
    throw std::invalid_argument("align: blunder_threshold must be positive");
  }
  if (cfg.max_search < 0 || cfg.max_iterations < 0) {
    throw std::invalid_argument("align: max_search and max_iterations must be non-negative");
  }
  const int jobs = detail::resolve_jobs(cfg.jobs);
  const double cs = reference.geometry().cell_size;
  const double thr = cfg.blunder_threshold;

  const std::vector<RefCell> cells = valid_cells(reference);
  {
    const Samples s0 = sample_diffs(moving, cells, 0.0, 0.0, false, jobs);
    const auto overlap = static_cast<std::size_t>(
        std::count_if(s0.d.begin(), s0.d.end(), [](double v) { return !std::isnan(v); }));
    if (overlap < kMinOverlapCells) {
      throw InsufficientOverlapError("align: only " + std::to_string(overlap) +
                                     " mutually valid cells (need " +
                                     std::to_string(kMinOverlapCells) + ")");
    }
  }

  // Coarse integer-cell search on a deterministic subsample.
  std::vector<RefCell> coarse_cells;
  {
    const std::size_t stride = std::max<std::size_t>(
        1, (cells.size() + kCoarseSampleTarget - 1) / kCoarseSampleTarget);
    for (std::size_t i = 0; i < cells.size(); i += stride) coarse_cells.push_back(cells[i]);
  }
  const std::size_t coarse_min = std::min<std::size_t>(
      kMinOverlapCells, std::max<std::size_t>(1, coarse_cells.size() / 4));
  double best_score = std::numeric_limits<double>::infinity();
  int best_ix = 0, best_iy = 0;
  double best_dz = kNaN;
  for (int iy = -cfg.max_search; iy <= cfg.max_search; ++iy) {
    for (int ix = -cfg.max_search; ix <= cfg.max_search; ++ix) {
      const Samples s = sample_diffs(moving, coarse_cells, ix * cs, iy * cs, false, jobs);
      const DzFit fit = fit_dz(s.d, kNaN, thr);
      if (fit.n_inliers < coarse_min) continue;
      const double score = truncated_cost(s.d, fit, thr);
      const int mag = ix * ix + iy * iy;
      const int best_mag = best_ix * best_ix + best_iy * best_iy;
      if (score < best_score || (score == best_score && mag < best_mag)) {
        best_score = score;
        best_ix = ix;
        best_iy = iy;
        best_dz = fit.dz;
      }
    }
  }

  // Gauss-Newton refinement of (dx, dy); dz is re-fit in closed form each pass.
  double dx = best_ix * cs;
  double dy = best_iy * cs;
  double dz = best_dz;
  bool converged = false;
  const double limit = (cfg.max_search + 1) * cs;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Samples s = sample_diffs(moving, cells, dx, dy, true, jobs);
    const DzFit fit = fit_dz(s.d, dz, thr);
    if (fit.n_inliers < kMinOverlapCells) break;
    dz = fit.dz;

    std::array<std::vector<double>, 9> terms;
    for (auto& t : terms) t.reserve(fit.n_inliers);
    for (std::size_t i = 0; i < s.d.size(); ++i) {
      if (!fit.inlier[i]) continue;
      const double j[3] = {s.gx[i], s.gy[i], -1.0};
      const double r = s.d[i] - dz;
      terms[0].push_back(j[0] * j[0]);
      terms[1].push_back(j[0] * j[1]);
      terms[2].push_back(j[0] * j[2]);
      terms[3].push_back(j[1] * j[1]);
      terms[4].push_back(j[1] * j[2]);
      terms[5].push_back(j[2] * j[2]);
      terms[6].push_back(j[0] * r);
      terms[7].push_back(j[1] * r);
      terms[8].push_back(j[2] * r);
    }
    double sum[9];
    for (int k = 0; k < 9; ++k) sum[k] = detail::pairwise_sum(terms[k]);
    const std::array<std::array<double, 3>, 3> normal = {{
        {sum[0], sum[1], sum[2]},
        {sum[1], sum[3], sum[4]},
        {sum[2], sum[4], sum[5]},
    }};
    std::array<double, 3> step{};
    if (!solve3(normal, {-sum[6], -sum[7], -sum[8]}, step)) {
      // No horizontal information (flat surface): the coarse shift stands.
      converged = true;
      break;
    }
    const double step_cells = std::max(std::abs(step[0]), std::abs(step[1])) / cs;
    if (step_cells > 1.0) {
      step[0] /= step_cells;
      step[1] /= step_cells;
    }
    dx += step[0];
    dy += step[1];
    if (std::abs(dx) > limit || std::abs(dy) > limit) break;
    if (step_cells < cfg.convergence_tol) {
      converged = true;
      break;
    }
  }

  const Samples final_s = sample_diffs(moving, cells, dx, dy, false, jobs);
  const DzFit fit = fit_dz(final_s.d, dz, thr);
  if (fit.n_valid < kMinOverlapCells) {
    throw InsufficientOverlapError("align: overlap lost at the estimated shift");
  }
  const Residuals res = residual_rms(final_s.d, fit);
  AlignmentResult out;
  out.dx = dx;
  out.dy = dy;
  out.dz = fit.dz;
  out.rmse_inliers = res.rmse_inliers;
  out.rmse_all = res.rmse_all;
  out.n_inliers = fit.n_inliers;
  out.n_total = fit.n_valid;
  out.converged = converged;
  return out;
}

RmseResult rmse(const RasterGrid& a, const RasterGrid& b, bool include_blunders,
                double threshold) {
  if (!(a.geometry() == b.geometry())) {
    throw GeometryMismatchError("rmse: grids do not share a geometry");
  }
  std::vector<double> sq;
  sq.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double va = a.values()[i];
    const double vb = b.values()[i];
    if (!a.valid(va) || !b.valid(vb)) continue;
    const double d = va - vb;
    if (!include_blunders && std::abs(d) > threshold) continue;
    sq.push_back(d * d);
  }
  if (sq.empty()) throw InsufficientOverlapError("rmse: no mutually valid cells");
  return {std::sqrt(detail::pairwise_sum(sq) / static_cast<double>(sq.size())), sq.size()};
}

}  // namespace dsmfuse
