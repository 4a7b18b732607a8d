#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <vector>

namespace lakegame {

struct ScalarSolveOptions {
  double x_min = -std::numeric_limits<double>::infinity();
  double x_max = std::numeric_limits<double>::infinity();
  int scan_points = 64;   ///< bracketing scan across the guess span (0 disables)
  bool log_scan = false;  ///< geometric scan spacing (span must be positive)
  int max_iter = 80;
  double dedup_rel = 1e-8;
};

namespace detail {

template <class F>
double numeric_df(F& f, double x) {
  const double h = 1e-7 * std::max(1.0, std::abs(x));
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Newton inside a sign-change bracket; bisection whenever the step
// leaves the bracket or the derivative is unusable.
template <class F, class DF>
bool solve_bracketed(F& f, DF& df, double a, double b, double fa, double fb,
                     double tol, int max_iter, double* root) {
  if (std::abs(fa) < tol) { *root = a; return true; }
  if (std::abs(fb) < tol) { *root = b; return true; }
  double x = 0.5 * (a + b);
  for (int it = 0; it < max_iter; ++it) {
    const double fx = f(x);
    if (std::isfinite(fx) && std::abs(fx) < tol) { *root = x; return true; }
    if (!std::isfinite(fx)) return false;
    if ((fx < 0.0) == (fa < 0.0)) { a = x; fa = fx; } else { b = x; fb = fx; }
    const double d = df(x);
    double xn = x - fx / d;
    if (!std::isfinite(xn) || xn <= a || xn >= b) xn = 0.5 * (a + b);
    x = xn;
    if (b - a < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(b))) {
      *root = 0.5 * (a + b);
      return std::abs(f(*root)) < tol;
    }
  }
  return false;
}

// Damped Newton from a free start, iterates confined to (lo, hi).
template <class F, class DF>
bool solve_newton(F& f, DF& df, double x, double lo, double hi, double tol,
                  int max_iter, double* root) {
  double fx = f(x);
  for (int it = 0; it < max_iter; ++it) {
    if (std::isfinite(fx) && std::abs(fx) < tol) { *root = x; return true; }
    if (!std::isfinite(fx)) return false;
    const double d = df(x);
    if (!std::isfinite(d) || d == 0.0) return false;
    double xn = x - fx / d;
    if (std::isfinite(lo) && xn <= lo) xn = 0.5 * (x + lo);
    if (std::isfinite(hi) && xn >= hi) xn = 0.5 * (x + hi);
    double fn = f(xn);
    int halvings = 0;
    while ((!std::isfinite(fn) || std::abs(fn) > std::abs(fx)) && halvings < 25) {
      xn = 0.5 * (x + xn);
      fn = f(xn);
      ++halvings;
    }
    if (!std::isfinite(fn) || (halvings == 25 && std::abs(fn) >= std::abs(fx)))
      return false;
    if (xn == x) return std::abs(fx) < tol ? (*root = x, true) : false;
    x = xn;
    fx = fn;
  }
  return false;
}

}  // namespace detail

/// All distinct roots reachable from the guess set: safeguarded Newton from
/// each guess plus a sign-change scan over the guess span. Roots satisfy
/// |residual| < tol and are deduplicated at dedup_rel relative distance,
/// sorted ascending. An empty result means no start converged.
template <class F, class DF>
  requires std::invocable<DF&, double>
std::vector<double> solve_scalar(F&& f, const std::vector<double>& guesses,
                                 double tol, DF&& df,
                                 const ScalarSolveOptions& opt = {}) {
  std::vector<double> roots;
  auto accept = [&](double r) {
    if (!std::isfinite(r)) return;
    if (r < opt.x_min || r > opt.x_max) return;
    const double fr = f(r);
    if (std::isfinite(fr) && std::abs(fr) < tol) roots.push_back(r);
  };

  if (!guesses.empty() && opt.scan_points >= 2) {
    double glo = guesses[0], ghi = guesses[0];
    for (double g : guesses) {
      glo = std::min(glo, g);
      ghi = std::max(ghi, g);
    }
    if (ghi > glo && (!opt.log_scan || glo > 0.0)) {
      const int k = opt.scan_points;
      std::vector<double> xs(k), fs(k);
      const double ratio = opt.log_scan ? std::pow(ghi / glo, 1.0 / (k - 1)) : 0.0;
      for (int i = 0; i < k; ++i) {
        xs[i] = opt.log_scan ? glo * std::pow(ratio, i)
                             : glo + (ghi - glo) * i / (k - 1);
        fs[i] = f(xs[i]);
      }
      for (int i = 0; i + 1 < k; ++i) {
        if (!std::isfinite(fs[i]) || !std::isfinite(fs[i + 1])) continue;
        if ((fs[i] < 0.0) != (fs[i + 1] < 0.0)) {
          double r;
          if (detail::solve_bracketed(f, df, xs[i], xs[i + 1], fs[i], fs[i + 1],
                                      tol, opt.max_iter, &r))
            accept(r);
        }
      }
      // near-tangency: start Newton from interior |f| minima without a
      // neighbouring sign change
      for (int i = 1; i + 1 < k; ++i) {
        if (!std::isfinite(fs[i])) continue;
        if (std::abs(fs[i]) < std::abs(fs[i - 1]) &&
            std::abs(fs[i]) <= std::abs(fs[i + 1])) {
          double r;
          if (detail::solve_newton(f, df, xs[i], opt.x_min, opt.x_max, tol,
                                   opt.max_iter, &r))
            accept(r);
        }
      }
    }
  }

  for (double g : guesses) {
    double r;
    if (detail::solve_newton(f, df, g, opt.x_min, opt.x_max, tol, opt.max_iter, &r))
      accept(r);
  }

  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots) {
    if (!out.empty()) {
      const double scale = std::max({std::abs(r), std::abs(out.back()), 1e-30});
      if (r - out.back() <= std::max(1e-13, opt.dedup_rel * scale)) continue;
    }
    out.push_back(r);
  }
  return out;
}

template <class F>
std::vector<double> solve_scalar(F&& f, const std::vector<double>& guesses,
                                 double tol, const ScalarSolveOptions& opt = {}) {
  auto nd = [&f](double x) { return detail::numeric_df(f, x); };
  return solve_scalar(f, guesses, tol, nd, opt);
}

struct SystemSolveOptions {
  int max_iter = 100;
  int max_halvings = 40;
  double fd_eps = 1e-7;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;  // optional
};

struct SystemSolveResult {
  Eigen::VectorXd x;
  bool converged = false;
  double residual_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

namespace detail {

template <class F>
Eigen::MatrixXd fd_jacobian(F& fn, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& fx, double eps) {
  const int d = static_cast<int>(x.size());
  Eigen::MatrixXd J(fx.size(), d);
  Eigen::VectorXd xp = x;
  for (int j = 0; j < d; ++j) {
    const double h = eps * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    J.col(j) = (fn(xp) - fx) / h;
    xp[j] = x[j];
  }
  return J;
}

}  // namespace detail

/// Damped Newton for a square system: full steps with up to max_halvings
/// step halvings per iteration until ||residual||_inf < tol.
template <class F>
SystemSolveResult solve_system(F&& fn, Eigen::VectorXd x0, double tol,
                               const SystemSolveOptions& opt = {}) {
  SystemSolveResult res;
  res.x = std::move(x0);
  Eigen::VectorXd fx = fn(res.x);
  double norm = fx.template lpNorm<Eigen::Infinity>();
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    if (std::isfinite(norm) && norm < tol) break;
    if (!fx.allFinite()) break;
    const Eigen::MatrixXd J =
        opt.jacobian ? opt.jacobian(res.x) : detail::fd_jacobian(fn, res.x, fx, opt.fd_eps);
    if (!J.allFinite()) break;
    const Eigen::VectorXd dx = J.fullPivLu().solve(-fx);
    if (!dx.allFinite()) break;
    double step = 1.0;
    bool improved = false;
    for (int h = 0; h <= opt.max_halvings; ++h) {
      const Eigen::VectorXd xn = res.x + step * dx;
      const Eigen::VectorXd fn_v = fn(xn);
      const double nn = fn_v.template lpNorm<Eigen::Infinity>();
      if (std::isfinite(nn) && fn_v.allFinite() && (nn < norm || nn < tol)) {
        res.x = xn;
        fx = fn_v;
        norm = nn;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  res.residual_norm = norm;
  res.converged = std::isfinite(norm) && norm < tol;
  return res;
}

}  // namespace lakegame
