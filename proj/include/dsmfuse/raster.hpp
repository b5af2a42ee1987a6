#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsmfuse {

inline constexpr double kDefaultNodata = -9999.0;

// Lower-left world origin. Storage is row-major with row 0 at the top, so
// world y grows as the row index shrinks. Right and top edges are exclusive.
struct GridGeometry {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 1.0;
  int n_cols = 1;
  int n_rows = 1;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(n_cols) * static_cast<std::size_t>(n_rows);
  }
  double max_x() const { return origin_x + n_cols * cell_size; }
  double max_y() const { return origin_y + n_rows * cell_size; }

  // Throws std::invalid_argument when the geometry is unusable.
  void validate() const;

  bool operator==(const GridGeometry&) const = default;
};

struct CellIndex {
  int col = 0;
  int row = 0;

  bool operator==(const CellIndex&) const = default;
};

class GeometryMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<CellIndex> world_to_cell(const GridGeometry& geom, double x, double y);

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
};

WorldPoint cell_center(const GridGeometry& geom, CellIndex c);

class RasterGrid {
 public:
  RasterGrid() = default;
  explicit RasterGrid(const GridGeometry& geom, double fill = kDefaultNodata,
                      double nodata = kDefaultNodata);
  RasterGrid(const GridGeometry& geom, std::vector<double> values,
             double nodata = kDefaultNodata);

  const GridGeometry& geometry() const { return geom_; }
  double nodata() const { return nodata_; }
  int cols() const { return geom_.n_cols; }
  int rows() const { return geom_.n_rows; }
  std::size_t size() const { return values_.size(); }

  double at(int col, int row) const { return values_[index(col, row)]; }
  double& at(int col, int row) { return values_[index(col, row)]; }
  double at(CellIndex c) const { return at(c.col, c.row); }

  bool valid(double v) const { return std::isfinite(v) && v != nodata_; }
  bool valid_at(int col, int row) const { return valid(at(col, row)); }
  bool in_bounds(int col, int row) const {
    return col >= 0 && row >= 0 && col < geom_.n_cols && row < geom_.n_rows;
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  std::size_t valid_count() const;

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(geom_.n_cols) +
           static_cast<std::size_t>(col);
  }

  GridGeometry geom_;
  std::vector<double> values_;
  double nodata_ = kDefaultNodata;
};

enum class ResampleMethod { Nearest, Bilinear };

RasterGrid resample(const RasterGrid& src, const GridGeometry& target, ResampleMethod method);

// Bilinear sample at a world position using cell-center support. Requires all
// four supporting cells to be valid; otherwise returns nullopt.
std::optional<double> sample_bilinear(const RasterGrid& grid, double x, double y);

// Rescales an intensity grid onto 0..255 when any valid value falls outside
// that range; grids already inside it are returned unchanged.
RasterGrid standardize_intensity(const RasterGrid& grid);

// ---- ASCII grid I/O ----

enum class RasterIoErrorKind {
  Io,
  MalformedHeader,
  RowLengthMismatch,
  RowCountMismatch,
  BadNumber,
};

class RasterIoError : public std::runtime_error {
 public:
  RasterIoError(RasterIoErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  RasterIoErrorKind kind() const { return kind_; }

 private:
  RasterIoErrorKind kind_;
};

RasterGrid parse_asc(const std::string& text);
std::string format_asc(const RasterGrid& grid);
RasterGrid read_asc(const std::string& path);
void write_asc(const std::string& path, const RasterGrid& grid);

// 8-bit P2 preview, linear min-max stretch of valid cells onto 1..255; nodata is 0.
std::string format_pgm(const RasterGrid& grid);
void write_pgm(const std::string& path, const RasterGrid& grid);

// Writes via a sibling temporary file and rename, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace dsmfuse
