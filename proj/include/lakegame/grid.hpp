#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lakegame {

/// Uniform 1D grid of n nodes on [lo, hi].
struct Grid1D {
  double lo = 0.0;
  double hi = 1.0;
  int n = 2;

  double step() const { return (hi - lo) / (n - 1); }
  double node(int i) const { return lo + i * step(); }

  void validate() const {
    if (n < 2) throw std::invalid_argument("grid needs at least two nodes");
    if (!(hi > lo)) throw std::invalid_argument("grid bounds must increase");
  }
};

/// Tensor-product grid: p-axis by m-axis.
struct Grid2D {
  Grid1D p;
  Grid1D m;

  int count() const { return p.n * m.n; }
  int index(int i1, int i2) const { return i1 * m.n + i2; }
};

namespace detail {

struct AxisPos {
  int cell;  // value interpolated on [node(cell), node(cell+1)]
  double t;  // barycentric weight of node(cell+1)
};

// Cell-clamped location: queries outside [lo, hi] fall on the boundary
// cell's linear extension; queries at a node come back with t exactly 0 or 1
// so node evaluations return stored values bit-for-bit.
inline AxisPos locate(const Grid1D& g, double x) {
  const double st = g.step();
  int cell = static_cast<int>(std::floor((x - g.lo) / st));
  if (cell < 0) cell = 0;
  if (cell > g.n - 2) cell = g.n - 2;
  const double a = g.node(cell);
  if (x == a) return {cell, 0.0};
  if (x == g.node(cell + 1)) return {cell, 1.0};
  return {cell, (x - a) / st};
}

}  // namespace detail

/// Piecewise-linear function on a uniform 1D grid.
struct PiecewiseLinear1D {
  Grid1D grid;
  std::vector<double> values;

  PiecewiseLinear1D() = default;
  PiecewiseLinear1D(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.n)
      throw std::invalid_argument("value count does not match grid");
  }

  double eval(double x) const {
    const auto p = detail::locate(grid, x);
    if (p.t == 0.0) return values[p.cell];
    if (p.t == 1.0) return values[p.cell + 1];
    return values[p.cell] * (1.0 - p.t) + values[p.cell + 1] * p.t;
  }

  /// Evaluation with the query point clamped to the grid hull.
  double eval_clamped(double x) const {
    if (x < grid.lo) x = grid.lo;
    if (x > grid.hi) x = grid.hi;
    return eval(x);
  }

  double min_value() const {
    double m = values[0];
    for (double v : values) m = std::min(m, v);
    return m;
  }
  double max_value() const {
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

/// Piecewise-bilinear function on a uniform tensor grid.
/// Values are stored row-major: index (i1, i2) = i1 * m.n + i2.
struct PiecewiseBilinear2D {
  Grid2D grid;
  std::vector<double> values;

  PiecewiseBilinear2D() = default;
  PiecewiseBilinear2D(Grid2D g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.count())
      throw std::invalid_argument("value count does not match grid");
  }

  double at(int i1, int i2) const { return values[grid.index(i1, i2)]; }

  double eval(double x, double y) const {
    const auto a = detail::locate(grid.p, x);
    const auto b = detail::locate(grid.m, y);
    const double v00 = at(a.cell, b.cell);
    const double v01 = at(a.cell, b.cell + 1);
    const double v10 = at(a.cell + 1, b.cell);
    const double v11 = at(a.cell + 1, b.cell + 1);
    const double w0 = 1.0 - a.t, w1 = a.t;
    const double u0 = 1.0 - b.t, u1 = b.t;
    return w0 * (u0 * v00 + u1 * v01) + w1 * (u0 * v10 + u1 * v11);
  }

  double eval_clamped(double x, double y) const {
    if (x < grid.p.lo) x = grid.p.lo;
    if (x > grid.p.hi) x = grid.p.hi;
    if (y < grid.m.lo) y = grid.m.lo;
    if (y > grid.m.hi) y = grid.m.hi;
    return eval(x, y);
  }

  double min_value() const {
    double m = values[0];
    for (double v : values) m = std::min(m, v);
    return m;
  }
  double max_value() const {
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

/// Partial derivative over M of gridded values, one-sided at the M borders
/// and central inside:
///   i2 = 1:      (v[i1, 2] - v[i1, 1]) / D2           (first node)
///   1 < i2 < N2: (v[i1, i2+1] - v[i1, i2-1]) / (2 D2)
///   i2 = N2:     (v[i1, N2] - v[i1, N2-1]) / D2        (last node)
inline double fd_partial_M(const Grid2D& g, const std::vector<double>& v, int i1, int i2) {
  const double d2 = g.m.step();
  if (i2 == 0) return (v[g.index(i1, 1)] - v[g.index(i1, 0)]) / d2;
  if (i2 == g.m.n - 1)
    return (v[g.index(i1, i2)] - v[g.index(i1, i2 - 1)]) / d2;
  return (v[g.index(i1, i2 + 1)] - v[g.index(i1, i2 - 1)]) / (2.0 * d2);
}

}  // namespace lakegame
