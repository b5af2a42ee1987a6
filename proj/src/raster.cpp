#include "dsmfuse/raster.hpp"

#include <algorithm>
#include <limits>

namespace dsmfuse {

void GridGeometry::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw std::invalid_argument("grid cell_size must be positive");
  }
  if (n_cols < 1 || n_rows < 1) {
    throw std::invalid_argument("grid must have at least one column and one row");
  }
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
    throw std::invalid_argument("grid origin must be finite");
  }
}

std::optional<CellIndex> world_to_cell(const GridGeometry& geom, double x, double y) {
  const double fc = std::floor((x - geom.origin_x) / geom.cell_size);
  const double fr = std::floor((y - geom.origin_y) / geom.cell_size);
  if (!(fc >= 0.0 && fc < geom.n_cols && fr >= 0.0 && fr < geom.n_rows)) {
    return std::nullopt;
  }
  const int col = static_cast<int>(fc);
  const int row_from_bottom = static_cast<int>(fr);
  return CellIndex{col, geom.n_rows - 1 - row_from_bottom};
}

WorldPoint cell_center(const GridGeometry& geom, CellIndex c) {
  return {geom.origin_x + (c.col + 0.5) * geom.cell_size,
          geom.origin_y + (geom.n_rows - c.row - 0.5) * geom.cell_size};
}

RasterGrid::RasterGrid(const GridGeometry& geom, double fill, double nodata)
    : geom_(geom), values_(geom.cell_count(), fill), nodata_(nodata) {
  geom_.validate();
}

RasterGrid::RasterGrid(const GridGeometry& geom, std::vector<double> values, double nodata)
    : geom_(geom), values_(std::move(values)), nodata_(nodata) {
  geom_.validate();
  if (values_.size() != geom_.cell_count()) {
    throw std::invalid_argument("raster value count does not match geometry");
  }
}

std::size_t RasterGrid::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [this](double v) { return valid(v); }));
}

namespace {

// Continuous cell-center coordinates: integer values land exactly on centers.
struct CenterCoord {
  double col;
  double row;
};

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

CenterCoord to_center_coord(const GridGeometry& g, double x, double y) {
  return {snap((x - g.origin_x) / g.cell_size - 0.5),
          snap((g.max_y() - y) / g.cell_size - 0.5)};
}

struct Support {
  int c0, r0;
  double t, u;
};

Support support_of(CenterCoord cc) {
  const double c0 = std::floor(cc.col);
  const double r0 = std::floor(cc.row);
  return {static_cast<int>(c0), static_cast<int>(r0), cc.col - c0, cc.row - r0};
}

// Cells that carry weight: the upper neighbor in each direction only when
// the fractional part is nonzero, so samples on a center need just that cell.
bool support_ok(const RasterGrid& g, const Support& s, int dc, int dr) {
  if ((dc == 1 && s.t == 0.0) || (dr == 1 && s.u == 0.0)) return true;
  return g.in_bounds(s.c0 + dc, s.r0 + dr) && g.valid_at(s.c0 + dc, s.r0 + dr);
}

std::optional<double> interpolate(const RasterGrid& g, const Support& s) {
  for (int dr = 0; dr <= 1; ++dr) {
    for (int dc = 0; dc <= 1; ++dc) {
      if (!support_ok(g, s, dc, dr)) return std::nullopt;
    }
  }
  const double v00 = g.at(s.c0, s.r0);
  if (s.t == 0.0 && s.u == 0.0) return v00;
  if (s.u == 0.0) return v00 * (1.0 - s.t) + g.at(s.c0 + 1, s.r0) * s.t;
  const double v01 = g.at(s.c0, s.r0 + 1);
  if (s.t == 0.0) return v00 * (1.0 - s.u) + v01 * s.u;
  const double v10 = g.at(s.c0 + 1, s.r0);
  const double v11 = g.at(s.c0 + 1, s.r0 + 1);
  const double top = v00 * (1.0 - s.t) + v10 * s.t;
  const double bottom = v01 * (1.0 - s.t) + v11 * s.t;
  return top * (1.0 - s.u) + bottom * s.u;
}

double nearest_valid_support(const RasterGrid& g, const Support& s) {
  double best = g.nodata();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int dr = 0; dr <= 1; ++dr) {
    for (int dc = 0; dc <= 1; ++dc) {
      if ((dc == 1 && s.t == 0.0) || (dr == 1 && s.u == 0.0)) continue;
      const int c = s.c0 + dc;
      const int r = s.r0 + dr;
      if (!g.in_bounds(c, r) || !g.valid_at(c, r)) continue;
      const double ec = dc - s.t;
      const double er = dr - s.u;
      const double d2 = ec * ec + er * er;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = g.at(c, r);
      }
    }
  }
  return best;
}

}  // namespace

std::optional<double> sample_bilinear(const RasterGrid& grid, double x, double y) {
  return interpolate(grid, support_of(to_center_coord(grid.geometry(), x, y)));
}

RasterGrid resample(const RasterGrid& src, const GridGeometry& target, ResampleMethod method) {
  target.validate();
  RasterGrid out(target, src.nodata(), src.nodata());
  const GridGeometry& sg = src.geometry();
  for (int row = 0; row < target.n_rows; ++row) {
    for (int col = 0; col < target.n_cols; ++col) {
      const WorldPoint p = cell_center(target, {col, row});
      const auto cell = world_to_cell(sg, p.x, p.y);
      if (!cell) continue;
      if (method == ResampleMethod::Nearest) {
        const double v = src.at(*cell);
        out.at(col, row) = src.valid(v) ? v : src.nodata();
        continue;
      }
      const Support s = support_of(to_center_coord(sg, p.x, p.y));
      if (auto v = interpolate(src, s)) {
        out.at(col, row) = *v;
      } else {
        out.at(col, row) = nearest_valid_support(src, s);
      }
    }
  }
  return out;
}

RasterGrid standardize_intensity(const RasterGrid& grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : grid.values()) {
    if (!grid.valid(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo <= hi) || (lo >= 0.0 && hi <= 255.0)) return grid;
  RasterGrid out = grid;
  const double span = hi - lo;
  for (double& v : out.values()) {
    if (!grid.valid(v)) continue;
    v = span > 0.0 ? (v - lo) * (255.0 / span) : 0.0;
  }
  return out;
}

}  // namespace dsmfuse
