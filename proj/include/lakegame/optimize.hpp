#pragma once

#include <cmath>
#include <utility>

namespace lakegame {

struct MaximizeResult {
  double x = 0.0;
  double value = 0.0;
};

/// Maximizer on [lo, hi] without a unimodality assumption: a 64-point coarse
/// scan picks the best lattice cell, golden-section search refines inside the
/// two cells around it.
template <class F>
MaximizeResult maximize_scalar(F&& f, double lo, double hi, double tol) {
  constexpr int kScan = 64;
  double best_x = lo;
  double best_v = f(lo);
  int best_i = 0;
  for (int i = 1; i < kScan; ++i) {
    const double x = lo + (hi - lo) * i / (kScan - 1);
    const double v = f(x);
    if (v > best_v) {
      best_v = v;
      best_x = x;
      best_i = i;
    }
  }
  double a = lo + (hi - lo) * (best_i > 0 ? best_i - 1 : 0) / (kScan - 1);
  double b = lo + (hi - lo) * (best_i < kScan - 1 ? best_i + 1 : kScan - 1) / (kScan - 1);

  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  MaximizeResult res{best_x, best_v};
  if (f1 > res.value) res = {x1, f1};
  if (f2 > res.value) res = {x2, f2};
  if (fm > res.value) res = {xm, fm};
  return res;
}

}  // namespace lakegame
