#pragma once

#include <cmath>
#include <vector>

#include "lakegame/grid.hpp"
#include "lakegame/lake_model.hpp"
#include "lakegame/params.hpp"
#include "lakegame/quadrature.hpp"

namespace lakegame {

/// Loadings are floored here, and only here, so that welfare stays finite
/// when an interpolated strategy dips to zero. Equation solving never clamps.
constexpr double kRolloutLoadingFloor = 1e-10;

/// Forward-Euler path of the 1D model under a per-agent loading rule.
struct Trajectory1D {
  double h = 0.0;
  std::vector<double> P;
  std::vector<double> L_agent;
  std::vector<double> util;

  double welfare(double rho) const { return discounted_integral(util, rho, h); }
};

/// Forward-Euler path of the 2D model.
struct Trajectory2D {
  double h = 0.0;
  std::vector<double> P;
  std::vector<double> M;
  std::vector<double> L_agent;
  std::vector<double> util;

  double welfare(double rho) const { return discounted_integral(util, rho, h); }
};

inline int rollout_steps(double h, double T) {
  return static_cast<int>(std::floor(T / h + 1e-9));
}

/// Generic explicit-Euler path for caller-supplied scalar dynamics.
template <class Rate>  // (t, x) -> dx/dt
std::vector<double> euler_path(double x0, Rate&& rate, double h, double T) {
  const int K = rollout_steps(h, T);
  std::vector<double> x(K + 1);
  x[0] = x0;
  for (int k = 0; k < K; ++k) x[k + 1] = x[k] + rate(k * h, x[k]) * h;
  return x;
}

/// Explicit Euler path from P0 under symmetric play of the loading rule
/// load(t, P) -> per-agent loading. States are clamped at P >= 0.
template <class LoadFn>
Trajectory1D euler_simulate_1d(const LakeParams& pr, double P0, LoadFn&& load,
                               double h, double T) {
  const int K = rollout_steps(h, T);
  Trajectory1D tr;
  tr.h = h;
  tr.P.resize(K + 1);
  tr.L_agent.resize(K + 1);
  tr.util.resize(K + 1);
  double P = P0;
  for (int k = 0; k <= K; ++k) {
    const double La = std::max(load(k * h, P), kRolloutLoadingFloor);
    tr.P[k] = P;
    tr.L_agent[k] = La;
    tr.util[k] = std::log(La) - pr.c * P * P;
    if (k < K)
      P = std::max(P + (pr.n * La + f_water(P, pr.M_const, pr)) * h, 0.0);
  }
  return tr;
}

/// 2D analogue; both states clamped at zero.
template <class LoadFn>
Trajectory2D euler_simulate_2d(const LakeParams& pr, State2D S0, LoadFn&& load,
                               double h, double T) {
  const int K = rollout_steps(h, T);
  Trajectory2D tr;
  tr.h = h;
  tr.P.resize(K + 1);
  tr.M.resize(K + 1);
  tr.L_agent.resize(K + 1);
  tr.util.resize(K + 1);
  double P = S0.P, M = S0.M;
  for (int k = 0; k <= K; ++k) {
    const double La = std::max(load(k * h, P, M), kRolloutLoadingFloor);
    tr.P[k] = P;
    tr.M[k] = M;
    tr.L_agent[k] = La;
    tr.util[k] = std::log(La) - pr.c * P * P;
    if (k < K) {
      double f, g;
      fg_rates(P, M, pr, &f, &g);
      P = std::max(P + (pr.n * La + f) * h, 0.0);
      M = std::max(M + g * h, 0.0);
    }
  }
  return tr;
}

/// Strategy view with a single node value replaced; evaluation stays the
/// clamped piecewise interpolation of the base function elsewhere.
struct NodeOverride1D {
  const PiecewiseLinear1D& base;
  int node = -1;
  double value = 0.0;

  double eval_clamped(double x) const {
    if (x < base.grid.lo) x = base.grid.lo;
    if (x > base.grid.hi) x = base.grid.hi;
    const auto p = detail::locate(base.grid, x);
    const double v0 = p.cell == node ? value : base.values[p.cell];
    const double v1 = p.cell + 1 == node ? value : base.values[p.cell + 1];
    if (p.t == 0.0) return v0;
    if (p.t == 1.0) return v1;
    return v0 * (1.0 - p.t) + v1 * p.t;
  }
};

struct NodeOverride2D {
  const PiecewiseBilinear2D& base;
  int i1 = -1, i2 = -1;
  double value = 0.0;

  double eval_clamped(double x, double y) const {
    if (x < base.grid.p.lo) x = base.grid.p.lo;
    if (x > base.grid.p.hi) x = base.grid.p.hi;
    if (y < base.grid.m.lo) y = base.grid.m.lo;
    if (y > base.grid.m.hi) y = base.grid.m.hi;
    const auto a = detail::locate(base.grid.p, x);
    const auto b = detail::locate(base.grid.m, y);
    auto at = [&](int j1, int j2) {
      return (j1 == i1 && j2 == i2) ? value : base.at(j1, j2);
    };
    const double w0 = 1.0 - a.t, w1 = a.t;
    const double u0 = 1.0 - b.t, u1 = b.t;
    return w0 * (u0 * at(a.cell, b.cell) + u1 * at(a.cell, b.cell + 1)) +
           w1 * (u0 * at(a.cell + 1, b.cell) + u1 * at(a.cell + 1, b.cell + 1));
  }
};

/// Fused rollout + quadrature used in the iteration hot loops. Same
/// recurrence and weights as euler_simulate + discounted_integral. The
/// strategy only needs eval_clamped.
template <class GFn>
double rollout_welfare_1d_g(const LakeParams& pr, const GFn& G, double P0,
                            double h, double T) {
  const int K = rollout_steps(h, T);
  const double decay = std::exp(-pr.rho * h);
  double P = P0;
  double disc = 1.0;
  double acc = 0.0;
  double u_last = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double La = std::max(G.eval_clamped(P), kRolloutLoadingFloor);
    const double u = std::log(La) - pr.c * P * P;
    acc += ((k == 0 || k == K) ? 0.5 : 1.0) * disc * u;
    u_last = u;
    if (k < K) {
      P = std::max(P + (pr.n * La + f_water(P, pr.M_const, pr)) * h, 0.0);
      disc *= decay;
    }
  }
  return acc * h + u_last * disc / pr.rho;
}

inline double rollout_welfare_1d(const LakeParams& pr, const PiecewiseLinear1D& G,
                                 double P0, double h, double T) {
  return rollout_welfare_1d_g(pr, G, P0, h, T);
}

template <class GFn>
double rollout_welfare_2d_g(const LakeParams& pr, const GFn& G, State2D S0,
                            double h, double T) {
  const int K = rollout_steps(h, T);
  const double decay = std::exp(-pr.rho * h);
  double P = S0.P, M = S0.M;
  double disc = 1.0;
  double acc = 0.0;
  double u_last = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double La = std::max(G.eval_clamped(P, M), kRolloutLoadingFloor);
    const double u = std::log(La) - pr.c * P * P;
    acc += ((k == 0 || k == K) ? 0.5 : 1.0) * disc * u;
    u_last = u;
    if (k < K) {
      double f, g;
      fg_rates(P, M, pr, &f, &g);
      P = std::max(P + (pr.n * La + f) * h, 0.0);
      M = std::max(M + g * h, 0.0);
      disc *= decay;
    }
  }
  return acc * h + u_last * disc / pr.rho;
}

inline double rollout_welfare_2d(const LakeParams& pr, const PiecewiseBilinear2D& G,
                                 State2D S0, double h, double T) {
  return rollout_welfare_2d_g(pr, G, S0, h, T);
}

/// Subcycled rollout for initial-guess construction: no Euler substep may
/// move the state by more than one grid cell. The seed strategy loads 1/xi
/// per agent on its plateau, and at the regular step size a single step
/// would jump across basins.
template <class GFn>
double rollout_welfare_1d_subcycled_g(const LakeParams& pr, const GFn& G,
                                      double cell, double P0, double h,
                                      double T) {
  double P = P0;
  double t = 0.0;
  double acc = 0.0;
  double u = 0.0;
  while (t < T) {
    double remaining = std::min(h, T - t);
    while (remaining > 0.0) {
      const double La = std::max(G.eval_clamped(P), kRolloutLoadingFloor);
      const double drift = pr.n * La + f_water(P, pr.M_const, pr);
      double dt = remaining;
      if (std::abs(drift) * dt > cell) dt = cell / std::abs(drift);
      u = std::log(La) - pr.c * P * P;
      acc += u * std::exp(-pr.rho * t) * dt;
      P = std::max(P + drift * dt, 0.0);
      t += dt;
      remaining -= dt;
    }
  }
  return acc + u * std::exp(-pr.rho * T) / pr.rho;
}

inline double rollout_welfare_1d_subcycled(const LakeParams& pr,
                                           const PiecewiseLinear1D& G, double P0,
                                           double h, double T) {
  return rollout_welfare_1d_subcycled_g(pr, G, G.grid.step(), P0, h, T);
}

template <class GFn>
double rollout_welfare_2d_subcycled_g(const LakeParams& pr, const GFn& G,
                                      double cell_p, double cell_m, State2D S0,
                                      double h, double T) {
  double P = S0.P, M = S0.M;
  double t = 0.0;
  double acc = 0.0;
  double u = 0.0;
  while (t < T) {
    double remaining = std::min(h, T - t);
    while (remaining > 0.0) {
      const double La = std::max(G.eval_clamped(P, M), kRolloutLoadingFloor);
      double f, g;
      fg_rates(P, M, pr, &f, &g);
      const double drift_p = pr.n * La + f;
      double dt = remaining;
      if (std::abs(drift_p) * dt > cell_p) dt = cell_p / std::abs(drift_p);
      if (std::abs(g) * dt > cell_m) dt = cell_m / std::abs(g);
      u = std::log(La) - pr.c * P * P;
      acc += u * std::exp(-pr.rho * t) * dt;
      P = std::max(P + drift_p * dt, 0.0);
      M = std::max(M + g * dt, 0.0);
      t += dt;
      remaining -= dt;
    }
  }
  return acc + u * std::exp(-pr.rho * T) / pr.rho;
}

inline double rollout_welfare_2d_subcycled(const LakeParams& pr,
                                           const PiecewiseBilinear2D& G,
                                           State2D S0, double h, double T) {
  return rollout_welfare_2d_subcycled_g(pr, G, G.grid.p.step(), G.grid.m.step(),
                                        S0, h, T);
}

/// Rollout welfare with only the first-step loading chosen freely and all
/// later loadings from the given strategy.
inline double rollout_welfare_2d_first(const LakeParams& pr,
                                       const PiecewiseBilinear2D& G, State2D S0,
                                       double h, double T, double x_first) {
  const int K = rollout_steps(h, T);
  const double decay = std::exp(-pr.rho * h);
  double P = S0.P, M = S0.M;
  double disc = 1.0;
  double acc = 0.0;
  double u_last = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double La =
        std::max(k == 0 ? x_first : G.eval_clamped(P, M), kRolloutLoadingFloor);
    const double u = std::log(La) - pr.c * P * P;
    acc += ((k == 0 || k == K) ? 0.5 : 1.0) * disc * u;
    u_last = u;
    if (k < K) {
      double f, g;
      fg_rates(P, M, pr, &f, &g);
      P = std::max(P + (pr.n * La + f) * h, 0.0);
      M = std::max(M + g * h, 0.0);
      disc *= decay;
    }
  }
  return acc * h + u_last * disc / pr.rho;
}

}  // namespace lakegame
