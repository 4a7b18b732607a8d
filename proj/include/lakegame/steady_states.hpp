#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lakegame/grid.hpp"
#include "lakegame/lake_model.hpp"
#include "lakegame/params.hpp"
#include "lakegame/rootfind.hpp"

namespace lakegame {

/// Descriptive regime split at the reported unstable point.
constexpr double kRegimeThreshold = 1.48;

inline std::string regime_label(double P) {
  if (P < kRegimeThreshold) return "oligotrophic";
  if (P > kRegimeThreshold) return "eutrophic";
  return "intermediate";
}

/// One equilibrium record. state is (P) in 1D or (P, M) in 2D; costates are
/// empty for strategy-extracted records.
struct SteadyState {
  Eigen::VectorXd state;
  double L_total = 0.0;
  std::vector<double> costates;
  bool stable = false;
  std::string regime;
  double welfare = 0.0;  // stationary per-agent welfare at the record

  double P() const { return state[0]; }
  double M() const { return state.size() > 1 ? state[1] : 0.0; }
};

namespace detail {

// Stationarity condition of the open-loop costate with L eliminated:
// L(P) = n (rho - f'(P)) / (2 c P). Steady states are the zeros of the
// drift along this manifold.
inline double olne_manifold_L(double P, const LakeParams& pr) {
  return pr.n * (pr.rho - f_water_dP(P, pr.M_const, pr)) / (2.0 * pr.c * P);
}

inline double olne_manifold_drift(double P, const LakeParams& pr) {
  return olne_manifold_L(P, pr) + f_water(P, pr.M_const, pr);
}

}  // namespace detail

/// All algebraic steady states of the 1D open-loop system
///   0 = L + f(P),  0 = f'(P) - rho + (2 c P / n) L
/// on P in (0, 6], found by damped Newton from a 40-point start lattice.
/// Stability is the sign of the drift slope along the costate manifold.
inline std::vector<SteadyState> olne_steady_1d(const LakeParams& pr,
                                               double p_max = 6.0) {
  pr.validate();
  auto residual = [&pr](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    const double P = x[0], L = x[1];
    r[0] = L + f_water(P, pr.M_const, pr);
    r[1] = f_water_dP(P, pr.M_const, pr) - pr.rho + (2.0 * pr.c * P / pr.n) * L;
    return r;
  };

  std::vector<Eigen::VectorXd> roots;
  const int kStarts = 40;
  for (int i = 0; i < kStarts; ++i) {
    const double P0 = 0.05 + (p_max - 0.05) * i / (kStarts - 1);
    Eigen::VectorXd x0(2);
    x0 << P0, std::max(-f_water(P0, pr.M_const, pr), 1e-3);
    const auto res = solve_system(residual, x0, 1e-12);
    if (!res.converged) continue;
    const double P = res.x[0], L = res.x[1];
    if (!(P > 1e-6 && P <= p_max && L > 0.0)) continue;
    bool dup = false;
    for (const auto& r : roots)
      if (std::abs(r[0] - P) < 1e-6) dup = true;
    if (!dup) roots.push_back(res.x);
  }
  std::sort(roots.begin(), roots.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  if (roots.empty())
    throw std::runtime_error("olne_steady_1d: no steady state found in range");

  std::vector<SteadyState> out;
  for (const auto& x : roots) {
    SteadyState ss;
    ss.state = Eigen::VectorXd::Constant(1, x[0]);
    ss.L_total = x[1];
    ss.costates = {-pr.n / x[1]};  // y = -1 / L_agent
    const double dp = 1e-5;
    const double slope = (detail::olne_manifold_drift(x[0] + dp, pr) -
                          detail::olne_manifold_drift(x[0] - dp, pr)) /
                         (2.0 * dp);
    ss.stable = slope < 0.0;
    ss.regime = regime_label(x[0]);
    ss.welfare = stationary_welfare(x[0], x[1], pr);
    out.push_back(std::move(ss));
  }
  return out;
}

/// Transformed costate of M at stationarity: mu = -f_M / (L (rho - g_M)).
inline double olne_mu_ss(const LakeParams& pr, double P, double M, double L) {
  const Partials d = partials(P, M, pr);
  return -d.f_M / (L * (pr.rho - d.g_M));
}

namespace detail {

// Right-hand side of the 2D open-loop Hamiltonian system in natural time,
// y = (P, M, L, mu).
inline void olne_ode_2d(const LakeParams& pr, const double* y, double* dy) {
  const double P = y[0], M = y[1], L = y[2], mu = y[3];
  double f, g;
  fg_rates(P, M, pr, &f, &g);
  const Partials d = partials(P, M, pr);
  dy[0] = L + f;
  dy[1] = g;
  dy[2] = (d.f_P - pr.rho) * L + (2.0 * pr.c * P / pr.n - mu * d.g_P) * L * L;
  dy[3] = (pr.rho - d.g_M) * mu + d.f_M / L;
}

}  // namespace detail

/// All algebraic steady states of the 2D open-loop system on
/// P in (0, 6], M in (100, 300], L > 0. mu is eliminated analytically via
/// the stationary costate relation, leaving a 3-unknown system solved from
/// a 12 x 8 start lattice. Reachability ("stable") is determined from the
/// 4 x 4 Hamiltonian-system Jacobian: a two-dimensional stable manifold
/// matches the number of pinned initial states.
inline std::vector<SteadyState> olne_steady_2d(const LakeParams& pr,
                                               double p_max = 6.0,
                                               double m_lo = 100.0,
                                               double m_hi = 300.0) {
  pr.validate();
  auto residual = [&pr](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(3);
    const double P = x[0], M = x[1], L = x[2];
    double f, g;
    fg_rates(P, M, pr, &f, &g);
    const Partials d = partials(P, M, pr);
    r[0] = L + f;
    r[1] = g;
    r[2] = (d.f_P - pr.rho) * L + (2.0 * pr.c * P / pr.n) * L * L +
           d.g_P * d.f_M * L / (pr.rho - d.g_M);
    return r;
  };

  std::vector<Eigen::VectorXd> roots;
  for (int ip = 0; ip < 12; ++ip)
    for (int im = 0; im < 8; ++im) {
      const double P0 = 0.2 + (p_max - 0.4) * ip / 11.0;
      const double M0 = m_lo + 5.0 + (m_hi - m_lo - 10.0) * im / 7.0;
      Eigen::VectorXd x0(3);
      x0 << P0, M0, std::max(-f_water(P0, M0, pr), 0.01);
      const auto res = solve_system(residual, x0, 1e-12);
      if (!res.converged) continue;
      const double P = res.x[0], M = res.x[1], L = res.x[2];
      if (!(P > 1e-6 && P <= p_max && M > m_lo && M <= m_hi && L > 0.0)) continue;
      bool dup = false;
      for (const auto& r : roots)
        if (std::abs(r[0] - P) < 1e-6 && std::abs(r[1] - M) < 1e-6) dup = true;
      if (!dup) roots.push_back(res.x);
    }
  std::sort(roots.begin(), roots.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  if (roots.empty())
    throw std::runtime_error("olne_steady_2d: no steady state found in range");

  std::vector<SteadyState> out;
  for (const auto& x : roots) {
    SteadyState ss;
    ss.state = Eigen::VectorXd(2);
    ss.state << x[0], x[1];
    ss.L_total = x[2];
    const double mu = olne_mu_ss(pr, x[0], x[1], x[2]);
    ss.costates = {-pr.n / x[2], mu};

    // stable-manifold dimension of the full state-costate system
    Eigen::Vector4d y0(x[0], x[1], x[2], mu);
    Eigen::Matrix4d J;
    double fy0[4], fyp[4];
    detail::olne_ode_2d(pr, y0.data(), fy0);
    for (int j = 0; j < 4; ++j) {
      Eigen::Vector4d yp = y0;
      const double hj = 1e-7 * std::max(1.0, std::abs(y0[j]));
      yp[j] += hj;
      detail::olne_ode_2d(pr, yp.data(), fyp);
      for (int k = 0; k < 4; ++k) J(k, j) = (fyp[k] - fy0[k]) / hj;
    }
    const Eigen::EigenSolver<Eigen::Matrix4d> es(J);
    int n_stable = 0;
    for (int k = 0; k < 4; ++k)
      if (es.eigenvalues()[k].real() < 0.0) ++n_stable;
    ss.stable = n_stable == 2;

    ss.regime = regime_label(x[0]);
    ss.welfare = stationary_welfare(x[0], x[2], pr);
    out.push_back(std::move(ss));
  }
  return out;
}

namespace detail {

/// Transversal zero crossings of a scalar profile sampled on [lo, hi].
/// Around a converged strategy the drift hugs zero over whole stretches
/// (every point of the stationarity manifold solves the node equation), so
/// raw sign changes come in noise clusters. Crossings are kept only where
/// the profile attains a real magnitude (>= eps) on both sides; each
/// cluster collapses to its first crossing, the edge facing the transit
/// region.
template <class F>
std::vector<std::pair<double, bool>> transversal_crossings(
    F&& value, double lo, double hi, int samples, double eps) {
  struct Crossing {
    double x;
    double before_mag;  // signed extremum of the segment left of it
  };
  std::vector<Crossing> raw;
  std::vector<double> xs(samples), vs(samples);
  for (int i = 0; i < samples; ++i) {
    xs[i] = lo + (hi - lo) * i / (samples - 1);
    vs[i] = value(xs[i]);
  }
  double seg_extreme = vs[0];
  for (int i = 0; i + 1 < samples; ++i) {
    if ((vs[i] < 0.0) != (vs[i + 1] < 0.0)) {
      double a = xs[i], b = xs[i + 1], fa = vs[i];
      for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
        const double m = 0.5 * (a + b);
        if ((value(m) < 0.0) == (fa < 0.0)) {
          a = m;
          fa = value(m);
        } else {
          b = m;
        }
      }
      raw.push_back({0.5 * (a + b), seg_extreme});
      seg_extreme = vs[i + 1];
    } else if (std::abs(vs[i + 1]) > std::abs(seg_extreme)) {
      seg_extreme = vs[i + 1];
    }
  }
  const double tail_extreme = seg_extreme;

  std::vector<std::pair<double, bool>> out;  // (location, stable)
  size_t j = 0;
  while (j < raw.size()) {
    const double left_mag = raw[j].before_mag;
    // extend the cluster while the separating segments stay below eps
    size_t k = j;
    while (k + 1 < raw.size() && std::abs(raw[k + 1].before_mag) < eps) ++k;
    const double right_mag = k + 1 < raw.size() ? raw[k + 1].before_mag : tail_extreme;
    if (std::abs(left_mag) >= eps && std::abs(right_mag) >= eps &&
        (left_mag < 0.0) != (right_mag < 0.0))
      out.push_back({raw[j].x, left_mag > 0.0});
    j = k + 1;
  }
  return out;
}

}  // namespace detail

/// Steady states of the closed-loop drift n G(P) + f(P) for a converged 1D
/// strategy: transversal sign changes of the drift over the grid, refined
/// by bisection, with sub-noise crossing clusters collapsed. Stable means
/// the drift falls from positive to negative.
inline std::vector<SteadyState> fbne_steady_from_strategy_1d(
    const PiecewiseLinear1D& G, const LakeParams& pr, double drift_eps = 1e-3) {
  auto drift = [&](double P) {
    return pr.n * G.eval_clamped(P) + f_water(P, pr.M_const, pr);
  };
  std::vector<SteadyState> out;
  const auto crossings = detail::transversal_crossings(
      drift, G.grid.lo, G.grid.hi, 4 * G.grid.n, drift_eps);
  for (const auto& [P, stable] : crossings) {
    SteadyState ss;
    ss.state = Eigen::VectorXd::Constant(1, P);
    ss.L_total = pr.n * G.eval_clamped(P);
    ss.stable = stable;
    ss.regime = regime_label(P);
    ss.welfare = stationary_welfare(P, std::max(ss.L_total, 1e-12), pr);
    out.push_back(std::move(ss));
  }
  return out;
}

/// 2D closed-loop steady states: intersections of the leftmost dP/dt = 0
/// isocline with dM/dt = 0, located by nested bisection over the grid.
inline std::vector<SteadyState> fbne_steady_from_strategy_2d(
    const PiecewiseBilinear2D& G, const LakeParams& pr, double drift_eps = 1e-3) {
  auto drift_p = [&](double P, double M) {
    return pr.n * G.eval_clamped(P, M) + f_water(P, M, pr);
  };
  // leftmost transversal P-crossing of drift_p = 0 at given M (NaN if none)
  auto leftmost_iso = [&](double M) {
    const Grid1D& gp = G.grid.p;
    const auto crossings = detail::transversal_crossings(
        [&](double P) { return drift_p(P, M); }, gp.lo, gp.hi, 4 * gp.n,
        drift_eps);
    if (crossings.empty()) return std::numeric_limits<double>::quiet_NaN();
    return crossings.front().first;
  };
  auto m_rate_on_iso = [&](double M) {
    const double P = leftmost_iso(M);
    if (!std::isfinite(P)) return std::numeric_limits<double>::quiet_NaN();
    return g_sediment(P, M, pr);
  };

  std::vector<SteadyState> out;
  const Grid1D& gm = G.grid.m;
  double prevM = gm.node(0), prevG = m_rate_on_iso(prevM);
  for (int j = 1; j < gm.n; ++j) {
    const double M = gm.node(j), gv = m_rate_on_iso(M);
    if (std::isfinite(prevG) && std::isfinite(gv) &&
        ((prevG < 0.0) != (gv < 0.0) || gv == 0.0)) {
      double lo = prevM, hi = M, flo = prevG;
      for (int it = 0; it < 80 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = m_rate_on_iso(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double Mss = 0.5 * (lo + hi);
      const double Pss = leftmost_iso(Mss);
      SteadyState ss;
      ss.state = Eigen::VectorXd(2);
      ss.state << Pss, Mss;
      ss.L_total = pr.n * G.eval_clamped(Pss, Mss);

      // closed-loop 2 x 2 Jacobian by central differences
      Eigen::Matrix2d Jc;
      const double dp = 1e-5, dm = 1e-4;
      Jc(0, 0) = (drift_p(Pss + dp, Mss) - drift_p(Pss - dp, Mss)) / (2 * dp);
      Jc(0, 1) = (drift_p(Pss, Mss + dm) - drift_p(Pss, Mss - dm)) / (2 * dm);
      Jc(1, 0) = (g_sediment(Pss + dp, Mss, pr) - g_sediment(Pss - dp, Mss, pr)) / (2 * dp);
      Jc(1, 1) = (g_sediment(Pss, Mss + dm, pr) - g_sediment(Pss, Mss - dm, pr)) / (2 * dm);
      const Eigen::EigenSolver<Eigen::Matrix2d> es(Jc);
      ss.stable = es.eigenvalues()[0].real() < 0.0 && es.eigenvalues()[1].real() < 0.0;
      ss.regime = regime_label(Pss);
      ss.welfare = stationary_welfare(Pss, std::max(ss.L_total, 1e-12), pr);
      out.push_back(std::move(ss));
    }
    prevM = M;
    prevG = gv;
  }
  return out;
}

}  // namespace lakegame
