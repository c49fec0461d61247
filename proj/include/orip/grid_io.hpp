#ifndef ORIP_GRID_IO_HPP
#define ORIP_GRID_IO_HPP

// Elevation raster readers and writers.
//
// ESRI ASCII grid:
//   ncols <int>
//   nrows <int>
//   xllcorner <real>   (or xllcenter)
//   yllcorner <real>   (or yllcenter)
//   cellsize <real>
//   NODATA_value <real>   (optional)
//   <nrows lines of ncols values, northernmost row first>
//
// CSV grid:
//   x1_min,x1_max,x2_min,x2_max,rows,cols
//   <six numbers>
//   <rows lines of cols comma-separated values, southernmost row first>
//   Empty fields and "nan" mark missing cells.
//
// Missing cells are filled with the value of the nearest valid cell
// (Euclidean distance in cell units, ties to the lowest row-major index).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "orip/common.hpp"
#include "orip/world_sim.hpp"

namespace orip::io {

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void fail(const std::string& path, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << path << ":" << line << ": " << what;
  throw ParseError(msg.str());
}

inline std::optional<double> parse_number(const std::string& tok) {
  const std::string t = trim(tok);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline void fill_missing(Matrix& values, const std::vector<bool>& missing, const std::string& path) {
  const Eigen::Index rows = values.rows(), cols = values.cols();
  std::vector<Eigen::Index> valid;
  for (Eigen::Index k = 0; k < rows * cols; ++k)
    if (!missing[static_cast<std::size_t>(k)]) valid.push_back(k);
  if (valid.empty()) throw ParseError(path + ": every cell is NODATA");
  if (valid.size() == missing.size()) return;
  for (Eigen::Index k = 0; k < rows * cols; ++k) {
    if (!missing[static_cast<std::size_t>(k)]) continue;
    const Eigen::Index r = k / cols, c = k % cols;
    Eigen::Index best = valid.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto v : valid) {
      const double dr = static_cast<double>(v / cols - r), dc = static_cast<double>(v % cols - c);
      const double d = dr * dr + dc * dc;
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    values(r, c) = values(best / cols, best % cols);
  }
}

inline world::ElevationGrid read_esri(std::istream& in, const std::string& path) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<long> ncols, nrows;
  std::optional<double> xll, yll, cellsize;
  bool center_x = false, center_y = false;
  std::optional<double> nodata;

  // Header lines start with a keyword; the first numeric line begins the data.
  std::streampos data_start = in.tellg();
  std::size_t data_line = 0;
  while (true) {
    data_start = in.tellg();
    if (!std::getline(in, line)) break;
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ss(t);
    std::string key;
    ss >> key;
    if (!key.empty() && (std::isalpha(static_cast<unsigned char>(key[0])) != 0)) {
      std::string val;
      if (!(ss >> val)) fail(path, line_no, "header keyword '" + key + "' has no value");
      const auto num = parse_number(val);
      if (!num) fail(path, line_no, "header value for '" + key + "' is not a number");
      const std::string k = lower(key);
      if (k == "ncols") ncols = std::lround(*num);
      else if (k == "nrows") nrows = std::lround(*num);
      else if (k == "xllcorner") xll = *num;
      else if (k == "xllcenter") { xll = *num; center_x = true; }
      else if (k == "yllcorner") yll = *num;
      else if (k == "yllcenter") { yll = *num; center_y = true; }
      else if (k == "cellsize") cellsize = *num;
      else if (k == "nodata_value") nodata = *num;
      else fail(path, line_no, "unknown header keyword '" + key + "'");
      continue;
    }
    data_line = line_no;
    break;
  }
  if (!ncols || !nrows || !xll || !yll || !cellsize)
    fail(path, line_no, "incomplete header (need ncols, nrows, xllcorner, yllcorner, cellsize)");
  if (*ncols < 2 || *nrows < 2) fail(path, line_no, "grid must have at least 2 rows and 2 columns");
  if (!(*cellsize > 0.0)) fail(path, line_no, "cellsize must be positive");
  if (data_line == 0) fail(path, line_no, "no data rows");

  in.clear();
  in.seekg(data_start);
  line_no = data_line - 1;
  Matrix values(*nrows, *ncols);
  std::vector<bool> missing(static_cast<std::size_t>(*nrows * *ncols), false);
  long file_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (file_row >= *nrows) fail(path, line_no, "more data rows than nrows");
    std::istringstream ss(t);
    std::string tok;
    long col = 0;
    const Eigen::Index r = *nrows - 1 - file_row;  // file is north-first
    while (ss >> tok) {
      const auto v = parse_number(tok);
      if (!v) fail(path, line_no, "non-numeric value '" + tok + "'");
      if (col >= *ncols) fail(path, line_no, "row has more than ncols values");
      const bool is_missing = (nodata && *v == *nodata) || !std::isfinite(*v);
      values(r, col) = is_missing ? 0.0 : *v;
      missing[static_cast<std::size_t>(r * *ncols + col)] = is_missing;
      ++col;
    }
    if (col != *ncols) {
      std::ostringstream msg;
      msg << "row has " << col << " values, expected " << *ncols;
      fail(path, line_no, msg.str());
    }
    ++file_row;
  }
  if (file_row != *nrows) {
    std::ostringstream msg;
    msg << "found " << file_row << " data rows, expected " << *nrows;
    fail(path, line_no, msg.str());
  }
  fill_missing(values, missing, path);

  world::GridGeometry g;
  g.rows = *nrows;
  g.cols = *ncols;
  const double x0 = center_x ? *xll - 0.5 * *cellsize : *xll;
  const double y0 = center_y ? *yll - 0.5 * *cellsize : *yll;
  g.extent = {x0, x0 + *cellsize * static_cast<double>(*ncols), y0, y0 + *cellsize * static_cast<double>(*nrows)};
  return world::ElevationGrid(g, std::move(values));
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline world::ElevationGrid read_csv_grid(std::istream& in, const std::string& path) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };
  if (!next_line()) fail(path, line_no, "empty file");
  const auto header = split_csv(trim(line));
  const std::vector<std::string> expected{"x1_min", "x1_max", "x2_min", "x2_max", "rows", "cols"};
  if (header.size() != expected.size()) fail(path, line_no, "CSV grid header must have 6 fields");
  for (std::size_t k = 0; k < expected.size(); ++k)
    if (lower(trim(header[k])) != expected[k]) fail(path, line_no, "unexpected header field '" + header[k] + "'");
  if (!next_line()) fail(path, line_no, "missing geometry row");
  const auto geo = split_csv(trim(line));
  if (geo.size() != 6) fail(path, line_no, "geometry row must have 6 values");
  std::array<double, 6> g{};
  for (std::size_t k = 0; k < 6; ++k) {
    const auto v = parse_number(geo[k]);
    if (!v) fail(path, line_no, "geometry value '" + geo[k] + "' is not a number");
    g[k] = *v;
  }
  world::GridGeometry geom;
  geom.extent = {g[0], g[1], g[2], g[3]};
  geom.rows = static_cast<Eigen::Index>(std::lround(g[4]));
  geom.cols = static_cast<Eigen::Index>(std::lround(g[5]));
  try {
    geom.validate();
  } catch (const InvalidParameter& e) {
    fail(path, line_no, e.what());
  }
  Matrix values(geom.rows, geom.cols);
  std::vector<bool> missing(static_cast<std::size_t>(geom.rows * geom.cols), false);
  Eigen::Index r = 0;
  while (next_line()) {
    if (r >= geom.rows) fail(path, line_no, "more data rows than declared");
    const auto fields = split_csv(trim(line));
    if (static_cast<Eigen::Index>(fields.size()) != geom.cols) {
      std::ostringstream msg;
      msg << "row has " << fields.size() << " values, expected " << geom.cols;
      fail(path, line_no, msg.str());
    }
    for (Eigen::Index c = 0; c < geom.cols; ++c) {
      const std::string f = lower(trim(fields[static_cast<std::size_t>(c)]));
      if (f.empty() || f == "nan") {
        values(r, c) = 0.0;
        missing[static_cast<std::size_t>(r * geom.cols + c)] = true;
        continue;
      }
      const auto v = parse_number(f);
      if (!v) fail(path, line_no, "non-numeric value '" + fields[static_cast<std::size_t>(c)] + "'");
      values(r, c) = *v;
    }
    ++r;
  }
  if (r != geom.rows) {
    std::ostringstream msg;
    msg << "found " << r << " data rows, expected " << geom.rows;
    fail(path, line_no, msg.str());
  }
  fill_missing(values, missing, path);
  return world::ElevationGrid(geom, std::move(values));
}

}  // namespace detail

/// Reads an ESRI ASCII grid or a CSV grid, chosen by the first keyword.
inline world::ElevationGrid load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string first;
  std::streampos start = in.tellg();
  std::string line;
  while (std::getline(in, line)) {
    first = detail::trim(line);
    if (!first.empty()) break;
  }
  in.clear();
  in.seekg(start);
  if (detail::lower(first).rfind("ncols", 0) == 0 || detail::lower(first).rfind("nrows", 0) == 0)
    return detail::read_esri(in, path);
  return detail::read_csv_grid(in, path);
}

inline void write_esri(const world::ElevationGrid& grid, std::ostream& out) {
  const auto& g = grid.geometry;
  if (std::abs(g.cell_width() - g.cell_height()) > 1e-9 * std::max(1.0, g.cell_width()))
    throw InvalidParameter("esri: ESRI ASCII grids need square cells");
  out << std::setprecision(17);
  out << "ncols " << g.cols << "\n"
      << "nrows " << g.rows << "\n"
      << "xllcorner " << g.extent.x1_min << "\n"
      << "yllcorner " << g.extent.x2_min << "\n"
      << "cellsize " << g.cell_width() << "\n"
      << "NODATA_value -9999\n";
  for (Eigen::Index r = g.rows - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < g.cols; ++c) out << (c ? " " : "") << grid.values(r, c);
    out << "\n";
  }
}

inline void write_csv_grid(const world::ElevationGrid& grid, std::ostream& out) {
  const auto& g = grid.geometry;
  out << std::setprecision(17);
  out << "x1_min,x1_max,x2_min,x2_max,rows,cols\n";
  out << g.extent.x1_min << "," << g.extent.x1_max << "," << g.extent.x2_min << "," << g.extent.x2_max << ","
      << g.rows << "," << g.cols << "\n";
  for (Eigen::Index r = 0; r < g.rows; ++r) {
    for (Eigen::Index c = 0; c < g.cols; ++c) out << (c ? "," : "") << grid.values(r, c);
    out << "\n";
  }
}

}  // namespace orip::io

#endif  // ORIP_GRID_IO_HPP
