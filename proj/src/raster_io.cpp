#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "dsmfuse/raster.hpp"

namespace dsmfuse {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

RasterGrid parse_asc(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view all(text);
    std::size_t pos = 0;
    while (pos <= all.size()) {
      std::size_t nl = all.find('\n', pos);
      if (nl == std::string_view::npos) nl = all.size();
      std::string_view line = all.substr(pos, nl - pos);
      if (!split_ws(line).empty()) lines.push_back(line);
      pos = nl + 1;
    }
  }

  static constexpr std::string_view kKeys[] = {"ncols", "nrows", "xllcorner",
                                               "yllcorner", "cellsize"};
  double header[5];
  for (std::size_t i = 0; i < 5; ++i) {
    if (i >= lines.size()) {
      throw RasterIoError(RasterIoErrorKind::MalformedHeader, "ascii grid: truncated header");
    }
    const auto toks = split_ws(lines[i]);
    if (toks.size() != 2 || !iequals(toks[0], kKeys[i])) {
      throw RasterIoError(RasterIoErrorKind::MalformedHeader,
                          "ascii grid: expected header key '" + std::string(kKeys[i]) + "'");
    }
    if (!parse_double(toks[1], header[i])) {
      throw RasterIoError(RasterIoErrorKind::MalformedHeader,
                          "ascii grid: bad value for '" + std::string(kKeys[i]) + "'");
    }
  }
  std::size_t next = 5;
  double nodata = kDefaultNodata;
  if (next < lines.size()) {
    const auto toks = split_ws(lines[next]);
    if (iequals(toks[0], "NODATA_value")) {
      if (toks.size() != 2 || !parse_double(toks[1], nodata)) {
        throw RasterIoError(RasterIoErrorKind::MalformedHeader, "ascii grid: bad NODATA_value");
      }
      ++next;
    }
  }

  const double ncols = header[0];
  const double nrows = header[1];
  if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows) ||
      ncols > std::numeric_limits<int>::max() || nrows > std::numeric_limits<int>::max() ||
      !(header[4] > 0.0)) {
    throw RasterIoError(RasterIoErrorKind::MalformedHeader,
                        "ascii grid: dimensions and cellsize must be positive");
  }
  GridGeometry geom{header[2], header[3], header[4], static_cast<int>(ncols),
                    static_cast<int>(nrows)};

  const std::size_t data_lines = lines.size() - next;
  if (data_lines != static_cast<std::size_t>(geom.n_rows)) {
    throw RasterIoError(RasterIoErrorKind::RowCountMismatch,
                        "ascii grid: expected " + std::to_string(geom.n_rows) +
                            " data rows, found " + std::to_string(data_lines));
  }
  std::vector<double> values;
  values.reserve(geom.cell_count());
  for (int r = 0; r < geom.n_rows; ++r) {
    const auto toks = split_ws(lines[next + r]);
    if (toks.size() != static_cast<std::size_t>(geom.n_cols)) {
      throw RasterIoError(RasterIoErrorKind::RowLengthMismatch,
                          "ascii grid: row " + std::to_string(r) + " has " +
                              std::to_string(toks.size()) + " values, expected " +
                              std::to_string(geom.n_cols));
    }
    for (auto tok : toks) {
      double v;
      if (!parse_double(tok, v)) {
        throw RasterIoError(RasterIoErrorKind::BadNumber,
                            "ascii grid: unparseable number '" + std::string(tok) + "' in row " +
                                std::to_string(r));
      }
      values.push_back(v);
    }
  }
  return RasterGrid(geom, std::move(values), nodata);
}

std::string format_asc(const RasterGrid& grid) {
  const GridGeometry& g = grid.geometry();
  std::string out;
  out.reserve(g.cell_count() * 12 + 128);
  out += "ncols " + std::to_string(g.n_cols) + "\n";
  out += "nrows " + std::to_string(g.n_rows) + "\n";
  out += "xllcorner " + format_value(g.origin_x) + "\n";
  out += "yllcorner " + format_value(g.origin_y) + "\n";
  out += "cellsize " + format_value(g.cell_size) + "\n";
  out += "NODATA_value " + format_value(grid.nodata()) + "\n";
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      if (c) out += ' ';
      const double v = grid.at(c, r);
      out += format_value(grid.valid(v) ? v : grid.nodata());
    }
    out += '\n';
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RasterIoError(RasterIoErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw RasterIoError(RasterIoErrorKind::Io, "read failed on '" + path + "'");
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RasterIoError(RasterIoErrorKind::Io, "cannot write '" + tmp + "'");
    out << contents;
    out.flush();
    if (!out) {
      throw RasterIoError(RasterIoErrorKind::Io, "write failed on '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw RasterIoError(RasterIoErrorKind::Io, "cannot rename into '" + path + "'");
  }
}

RasterGrid read_asc(const std::string& path) { return parse_asc(read_file(path)); }

void write_asc(const std::string& path, const RasterGrid& grid) {
  write_file_atomic(path, format_asc(grid));
}

std::string format_pgm(const RasterGrid& grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : grid.values()) {
    if (!grid.valid(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::string out = "P2\n" + std::to_string(grid.cols()) + " " + std::to_string(grid.rows()) +
                    "\n255\n";
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const double v = grid.at(c, r);
      int level = 0;
      if (grid.valid(v)) {
        level = hi > lo ? 1 + static_cast<int>(std::lround(254.0 * (v - lo) / (hi - lo))) : 255;
      }
      if (c) out += ' ';
      out += std::to_string(level);
    }
    out += '\n';
  }
  return out;
}

void write_pgm(const std::string& path, const RasterGrid& grid) {
  write_file_atomic(path, format_pgm(grid));
}

}  // namespace dsmfuse
