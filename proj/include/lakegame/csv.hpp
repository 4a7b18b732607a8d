#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lakegame/grid.hpp"

namespace lakegame {

inline std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  }

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

/// Reads back a (P, M, value) grid dump in file order; the caller is
/// responsible for matching the node count against the target grid.
inline std::vector<double> read_grid_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c2 = line.rfind(',');
    if (c2 == std::string::npos)
      throw std::runtime_error("bad grid row in " + path + ": " + line);
    values.push_back(std::stod(line.substr(c2 + 1)));
  }
  return values;
}

/// Grid dump as (P, M, value) triples; 1D grids carry the constant M.
inline void write_grid_csv(const std::string& path, const PiecewiseLinear1D& fn,
                           double M_const, const std::string& value_name) {
  CsvWriter w(path);
  w.row({"P", "M", value_name});
  for (int i = 0; i < fn.grid.n; ++i)
    w.row({csv_num(fn.grid.node(i)), csv_num(M_const), csv_num(fn.values[i])});
}

inline void write_grid_csv(const std::string& path, const PiecewiseBilinear2D& fn,
                           const std::string& value_name) {
  CsvWriter w(path);
  w.row({"P", "M", value_name});
  for (int i1 = 0; i1 < fn.grid.p.n; ++i1)
    for (int i2 = 0; i2 < fn.grid.m.n; ++i2)
      w.row({csv_num(fn.grid.p.node(i1)), csv_num(fn.grid.m.node(i2)),
             csv_num(fn.at(i1, i2))});
}

}  // namespace lakegame
