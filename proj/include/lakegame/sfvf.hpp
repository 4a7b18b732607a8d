#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "lakegame/grid.hpp"
#include "lakegame/lake_model.hpp"
#include "lakegame/optimize.hpp"
#include "lakegame/parallel.hpp"
#include "lakegame/params.hpp"
#include "lakegame/rootfind.hpp"
#include "lakegame/simulate.hpp"

namespace lakegame {

/// Value floor offset above the stay-put welfare; see the update step.
constexpr double kSigmaPremium = 0.02;

struct SfvfIterDiag {
  int iteration = 0;
  double dV = 0.0;
  double dG = 0.0;
  int no_solution_nodes = 0;
};

struct SfvfConfig {
  double omega = 0.5;  ///< damping of the value update
  double xi = 0.1;     ///< monotonization slope of the initial guess
  double tol_V = 1e-4;
  double tol_G = 1e-4;
  int max_iter = 500;
  double h = 0.1;   ///< rollout step
  double T = 600.0; ///< rollout horizon
  double floor_1d = 0.001;  ///< loading floor in the 1D initial guess
  double floor_2d = 0.01;   ///< loading floor in the 2D initial guess
  double node_tol = 1e-10;  ///< residual tolerance of the node-equation roots
  double omega_set_tol = 1e-3;  ///< node-equation residual marking a node into Omega
  int multistart = 12;
  double ms_lo = 1e-4, ms_hi = 10.0;
  std::function<void(const SfvfIterDiag&)> diag;  ///< optional log sink
};

namespace detail {

inline std::vector<double> log_spaced(double lo, double hi, int k) {
  std::vector<double> v(k);
  const double ratio = std::pow(hi / lo, 1.0 / (k - 1));
  for (int i = 0; i < k; ++i) v[i] = lo * std::pow(ratio, i);
  return v;
}

// Backward monotonization of the stationary-value seed: walking down from
// the last node, a node that fails to exceed its left neighbour lifts the
// neighbour by slope xi per grid step, which makes the series strictly
// decreasing.
inline std::vector<double> monotonize_backward(const std::vector<double>& v,
                                               double xi, double step) {
  const int n = static_cast<int>(v.size());
  std::vector<double> w(n);
  w[n - 1] = v[n - 1];
  for (int i = n - 1; i >= 1; --i)
    w[i - 1] = (w[i] >= v[i - 1]) ? w[i] + xi * step : v[i - 1];
  return w;
}

// Three-case finite-difference stencil mapping a decreasing value seed to a
// positive loading via the first-order condition G = -1 / V'.
inline std::vector<double> loading_from_decreasing_values(
    const std::vector<double>& w, double step) {
  const int n = static_cast<int>(w.size());
  std::vector<double> g(n);
  g[0] = -step / (w[1] - w[0]);
  for (int i = 1; i + 1 < n; ++i) g[i] = -2.0 * step / (w[i + 1] - w[i - 1]);
  g[n - 1] = -step / (w[n - 1] - w[n - 2]);
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1D
// ---------------------------------------------------------------------------

struct Sfvf1DResult {
  Grid1D grid;
  std::vector<double> V;  // per-agent value at nodes
  std::vector<double> G;  // per-agent loading at nodes
  std::vector<double> residual;  // node-equation residual at the final iterate
  std::vector<int> omega;        // nodes with |residual| > omega_set_tol
  bool converged = false;
  int iterations = 0;

  PiecewiseLinear1D value_fn() const { return {grid, V}; }
  PiecewiseLinear1D strategy_fn() const { return {grid, G}; }
};

/// Node equation of the 1D iteration at (P, V):
///   ln(x) - c P^2 - n - f(P)/x - rho V = 0,  x = per-agent loading.
inline double node_equation_1d(double x, double P, double fP, double V,
                               const LakeParams& pr) {
  return std::log(x) - pr.c * P * P - pr.n - fP / x - pr.rho * V;
}

namespace detail {

// Multi-root selection: branch continuation plus decisive welfare.
// The root nearest the previous iterate (log distance: roots move
// multiplicatively with the value level) is the incumbent; a challenger
// displaces it only by beating its rollout welfare by a margin. The margin
// anneals with the previous value-update size - while V is still moving,
// welfare estimates are untrustworthy - and bottoms out at a few percent,
// so genuinely better branches (several units at a trapped node or across
// a basin choice) always win, while sub-unit differences - the
// equilibrium-selection scale selected by the initial guess - never flip a
// node.
template <class WelfareFn>
double select_branch(const std::vector<double>& roots, double incumbent,
                     double dV_prev, WelfareFn&& welfare_of) {
  if (roots.size() == 1) return roots[0];
  size_t inc = 0;
  const double ref = std::max(incumbent, 1e-12);
  for (size_t c = 1; c < roots.size(); ++c)
    if (std::abs(std::log(roots[c] / ref)) < std::abs(std::log(roots[inc] / ref)))
      inc = c;
  const double w_inc = welfare_of(roots[inc]);
  const double displace = std::max(1e-2 * std::max(1.0, std::abs(w_inc)), dV_prev);
  size_t best = inc;
  double w_best = w_inc;
  for (size_t c = 0; c < roots.size(); ++c) {
    if (c == inc) continue;
    const double w = welfare_of(roots[c]);
    if (w > w_best + displace) {
      best = c;
      w_best = w;
    }
  }
  return roots[best];
}

inline std::vector<double> node_roots(double fP, double cP2_n_rhoV,
                                      double prev, const SfvfConfig& cfg) {
  // residual ln(x) - fP/x - cP2_n_rhoV with derivative 1/x + fP/x^2
  auto f = [fP, cP2_n_rhoV](double x) {
    return std::log(x) - fP / x - cP2_n_rhoV;
  };
  auto df = [fP](double x) { return 1.0 / x + fP / (x * x); };
  std::vector<double> guesses = log_spaced(cfg.ms_lo, cfg.ms_hi, cfg.multistart);
  guesses.push_back(prev);
  ScalarSolveOptions opt;
  opt.x_min = 1e-9;
  opt.x_max = 1e3;
  opt.log_scan = true;
  opt.scan_points = 64;
  return solve_scalar(f, guesses, cfg.node_tol, df, opt);
}

}  // namespace detail

namespace detail {

// The node equation loses its roots when the value drops below the
// consistency threshold (the residual minimum at x = -f turns positive).
// Guesses are kept above it so the first sweep is solvable everywhere; the
// plateau of the monotonized seed loads 1/xi per agent, and a band of
// unsolvable nodes would keep that catapult loading for good.
inline double node_solvability_floor(double fP, double cP2, const LakeParams& pr) {
  if (fP >= 0.0) return -std::numeric_limits<double>::infinity();
  return (std::log(-fP) + 1.0 - cP2 - pr.n) / pr.rho;
}

// stay-put welfare of the stationary manifold, -inf where no positive
// stationary loading exists (f >= 0)
inline double stationary_value(double fP, double cP2, const LakeParams& pr) {
  if (fP >= 0.0) return -std::numeric_limits<double>::infinity();
  return (std::log(-fP / pr.n) - cP2) / pr.rho;
}


}  // namespace detail

/// Initial guess of Algorithm 1.1: stationary values floored at floor_1d,
/// monotonized backward with slope xi, mapped to a loading guess by the
/// first-order stencil; the value guess is the rollout welfare plus one,
/// lifted to the node-equation solvability floor where needed.
inline void initial_guess_1d(const Grid1D& grid, const LakeParams& pr,
                             const SfvfConfig& cfg, std::vector<double>* V0,
                             std::vector<double>* G0) {
  const int n = grid.n;
  std::vector<double> v0(n);
  for (int i = 0; i < n; ++i) {
    const double P = grid.node(i);
    const double Lst = std::max(-f_water(P, pr.M_const, pr) / pr.n, cfg.floor_1d);
    v0[i] = (std::log(Lst) - pr.c * P * P) / pr.rho;
  }
  const auto w = detail::monotonize_backward(v0, cfg.xi, grid.step());
  *G0 = detail::loading_from_decreasing_values(w, grid.step());

  const PiecewiseLinear1D Gfn(grid, *G0);
  V0->assign(n, 0.0);
  parallel_for(n, [&](int i) {
    const double P = grid.node(i);
    const double v =
        rollout_welfare_1d_subcycled(pr, Gfn, P, cfg.h, cfg.T) + 1.0;
    (*V0)[i] = std::max(
        v, detail::stationary_value(f_water(P, pr.M_const, pr), pr.c * P * P, pr) +
               kSigmaPremium);
  });
}

namespace detail {

struct NodeCache1D {
  std::vector<double> P, fP, cP2, sigma;
};

inline NodeCache1D cache_nodes_1d(const Grid1D& grid, const LakeParams& pr) {
  NodeCache1D c;
  c.P.resize(grid.n);
  c.fP.resize(grid.n);
  c.cP2.resize(grid.n);
  c.sigma.resize(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    c.P[i] = grid.node(i);
    c.fP[i] = f_water(c.P[i], pr.M_const, pr);
    c.cP2[i] = pr.c * c.P[i] * c.P[i];
    c.sigma[i] = stationary_value(c.fP[i], c.cP2[i], pr);
  }
  return c;
}

}  // namespace detail

/// Strategy function - value function iteration for the 1D game; n = 1
/// reproduces the cooperative (optimal management) solution. An optional
/// (V, G) pair seeds the iteration in place of the constructed guess.
inline Sfvf1DResult run_sfvf_1d(const LakeParams& pr, const Grid1D& grid,
                                const SfvfConfig& cfg = {},
                                const std::vector<double>* V_seed = nullptr,
                                const std::vector<double>* G_seed = nullptr) {
  pr.validate();
  grid.validate();
  Sfvf1DResult res;
  res.grid = grid;
  const int N = grid.n;
  const auto nodes = detail::cache_nodes_1d(grid, pr);

  if (V_seed && G_seed) {
    res.V = *V_seed;
    res.G = *G_seed;
  } else {
    initial_guess_1d(grid, pr, cfg, &res.V, &res.G);
  }

  std::vector<double> x_new(N), v_new(N);
  std::vector<char> flagged(N, 0);
  double dV_prev = std::numeric_limits<double>::infinity();

  for (int j = 0; j < cfg.max_iter; ++j) {
    res.iterations = j + 1;
    const PiecewiseLinear1D Gold(grid, res.G);

    // Step 2: per-node root solve. Multiple roots are ranked by the welfare
    // of a rollout under the old strategy with this node's value replaced by
    // the candidate (strategies are state-contingent, so the replacement
    // applies whenever the path revisits the node). A node without roots
    // keeps the previous iterate and is flagged.
    parallel_for(N, [&](int i) {
      flagged[i] = 0;
      const double rhs = nodes.cP2[i] + pr.n + pr.rho * res.V[i];
      const auto roots = detail::node_roots(nodes.fP[i], rhs, res.G[i], cfg);
      if (roots.empty()) {
        x_new[i] = res.G[i];
        flagged[i] = 1;
      } else {
        x_new[i] = detail::select_branch(
            roots, res.G[i], dV_prev, [&](double cand) {
              // subcycled: a full-size Euler step under the candidate can
              // hop across cells and harvest chattering payoffs that the
              // continuous dynamics do not admit
              return rollout_welfare_1d_subcycled_g(
                  pr, NodeOverride1D{Gold, i, cand}, grid.step(), nodes.P[i],
                  cfg.h, cfg.T);
            });
      }
    });

    const PiecewiseLinear1D Gnew(grid, x_new);

    // Step 3: damped value update from symmetric-play rollouts.
    parallel_for(N, [&](int i) {
      v_new[i] = rollout_welfare_1d(pr, Gnew, nodes.P[i], cfg.h, cfg.T);
    });

    double dV = 0.0, dG = 0.0;
    int n_flagged = 0;
    for (int i = 0; i < N; ++i) {
      // floored slightly above the stay-put welfare: an undershoot below it
      // flips the stationary-branch root to the runaway side, while sitting
      // exactly at it freezes the node into the degenerate stay-put family;
      // the small premium keeps the approach drift alive so stationary
      // stretches drain toward the kink
      const double Vn = std::max(
          cfg.omega * res.V[i] + (1.0 - cfg.omega) * v_new[i],
          nodes.sigma[i] + kSigmaPremium);
      dV = std::max(dV, std::abs(Vn - res.V[i]));
      dG = std::max(dG, std::abs(x_new[i] - res.G[i]));
      res.V[i] = Vn;
      res.G[i] = x_new[i];
      n_flagged += flagged[i];
    }
    if (cfg.diag) cfg.diag({j, dV, dG, n_flagged});
    dV_prev = dV;
    if (dV < cfg.tol_V && dG < cfg.tol_G) {
      res.converged = true;
      break;
    }
  }

  // post-convergence verification of the node equation
  res.residual.resize(N);
  res.omega.clear();
  for (int i = 0; i < N; ++i) {
    res.residual[i] =
        node_equation_1d(res.G[i], nodes.P[i], nodes.fP[i], res.V[i], pr);
    if (std::abs(res.residual[i]) > cfg.omega_set_tol) res.omega.push_back(i);
  }
  return res;
}

// ---------------------------------------------------------------------------
// 2D
// ---------------------------------------------------------------------------

struct Sfvf2DResult {
  Grid2D grid;
  std::vector<double> V;
  std::vector<double> G;
  std::vector<double> residual;
  std::vector<int> omega;           // flat indices with large residual
  std::vector<double> residual_pre_refine;
  bool converged = false;
  int iterations = 0;
  int refined_nodes = 0;

  PiecewiseBilinear2D value_fn() const { return {grid, V}; }
  PiecewiseBilinear2D strategy_fn() const { return {grid, G}; }
};

/// Node equation of the 2D iteration at (P, M, V, w = dV/dM):
///   ln(x) - c P^2 - n - f/x + w g - rho V = 0.
inline double node_equation_2d(double x, double P, double f, double g, double w,
                               double V, const LakeParams& pr) {
  return std::log(x) - pr.c * P * P - pr.n - f / x + w * g - pr.rho * V;
}

/// 2D initial guess: stationary values floored at floor_2d, monotonized
/// backward along P per M-row, then clamped non-increasing along M; the
/// loading guess uses the P-direction stencil and the value guess is the
/// rollout welfare shifted down by half its maximum.
inline void initial_guess_2d(const Grid2D& grid, const LakeParams& pr,
                             const SfvfConfig& cfg, std::vector<double>* V0,
                             std::vector<double>* G0) {
  const int n1 = grid.p.n, n2 = grid.m.n;
  std::vector<double> v0(grid.count());
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2) {
      const double P = grid.p.node(i1), M = grid.m.node(i2);
      const double Lst = std::max(-f_water(P, M, pr) / pr.n, cfg.floor_2d);
      v0[grid.index(i1, i2)] = (std::log(Lst) - pr.c * P * P) / pr.rho;
    }

  // decreasing over i1 within each M-row
  std::vector<double> row(n1);
  for (int i2 = 0; i2 < n2; ++i2) {
    for (int i1 = 0; i1 < n1; ++i1) row[i1] = v0[grid.index(i1, i2)];
    const auto w = detail::monotonize_backward(row, cfg.xi, grid.p.step());
    for (int i1 = 0; i1 < n1; ++i1) v0[grid.index(i1, i2)] = w[i1];
  }
  // non-increasing over i2; the min-clamp preserves strict decrease in i1
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 1; i2 < n2; ++i2) {
      const int k = grid.index(i1, i2);
      v0[k] = std::min(v0[k], v0[grid.index(i1, i2 - 1)]);
    }

  G0->assign(grid.count(), 0.0);
  std::vector<double> col(n1);
  for (int i2 = 0; i2 < n2; ++i2) {
    for (int i1 = 0; i1 < n1; ++i1) col[i1] = v0[grid.index(i1, i2)];
    const auto g = detail::loading_from_decreasing_values(col, grid.p.step());
    for (int i1 = 0; i1 < n1; ++i1) (*G0)[grid.index(i1, i2)] = g[i1];
  }

  const PiecewiseBilinear2D Gfn(grid, *G0);
  std::vector<double> v_roll(grid.count());
  parallel_for(grid.count(), [&](int k) {
    const State2D S{grid.p.node(k / n2), grid.m.node(k % n2)};
    v_roll[k] = rollout_welfare_2d_subcycled(pr, Gfn, S, cfg.h, cfg.T);
  });
  const double vmax = *std::max_element(v_roll.begin(), v_roll.end());
  V0->resize(grid.count());
  for (int k = 0; k < grid.count(); ++k) {
    const double P = grid.p.node(k / n2), M = grid.m.node(k % n2);
    (*V0)[k] = std::max(
        v_roll[k] - vmax / 2.0,
        detail::stationary_value(f_water(P, M, pr), pr.c * P * P, pr) +
            kSigmaPremium);
  }
}

namespace detail {

struct NodeCache2D {
  std::vector<double> P, M, f, g, cP2, sigma;
};

inline NodeCache2D cache_nodes_2d(const Grid2D& grid, const LakeParams& pr) {
  NodeCache2D c;
  const int n = grid.count();
  c.P.resize(n);
  c.M.resize(n);
  c.f.resize(n);
  c.g.resize(n);
  c.cP2.resize(n);
  c.sigma.resize(n);
  for (int i1 = 0; i1 < grid.p.n; ++i1)
    for (int i2 = 0; i2 < grid.m.n; ++i2) {
      const int k = grid.index(i1, i2);
      c.P[k] = grid.p.node(i1);
      c.M[k] = grid.m.node(i2);
      fg_rates(c.P[k], c.M[k], pr, &c.f[k], &c.g[k]);
      c.cP2[k] = pr.c * c.P[k] * c.P[k];
      c.sigma[k] = stationary_value(c.f[k], c.cP2[k], pr);
    }
  return c;
}

// ascending BFS distance (4-neighbourhood) to the complement of the flagged
// set; flagged nodes unreachable from the complement get the largest label
inline std::vector<int> distance_to_complement(const Grid2D& grid,
                                               const std::vector<char>& in_set) {
  const int n1 = grid.p.n, n2 = grid.m.n;
  std::vector<int> dist(grid.count(), -1);
  std::deque<int> queue;
  for (int k = 0; k < grid.count(); ++k)
    if (!in_set[k]) {
      dist[k] = 0;
      queue.push_back(k);
    }
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    const int i1 = k / n2, i2 = k % n2;
    const int nb[4][2] = {{i1 - 1, i2}, {i1 + 1, i2}, {i1, i2 - 1}, {i1, i2 + 1}};
    for (const auto& q : nb) {
      if (q[0] < 0 || q[0] >= n1 || q[1] < 0 || q[1] >= n2) continue;
      const int kk = q[0] * n2 + q[1];
      if (dist[kk] < 0) {
        dist[kk] = dist[k] + 1;
        queue.push_back(kk);
      }
    }
  }
  for (int& d : dist)
    if (d < 0) d = grid.count();
  return dist;
}

}  // namespace detail

/// Node-equation residual grid at the current (V, G), with the dV/dM
/// estimate recomputed by the finite-difference stencil.
inline std::vector<double> sfvf_residual_2d(const Grid2D& grid,
                                            const std::vector<double>& V,
                                            const std::vector<double>& G,
                                            const LakeParams& pr) {
  const auto nodes = detail::cache_nodes_2d(grid, pr);
  std::vector<double> r(grid.count());
  for (int i1 = 0; i1 < grid.p.n; ++i1)
    for (int i2 = 0; i2 < grid.m.n; ++i2) {
      const int k = grid.index(i1, i2);
      const double w = fd_partial_M(grid, V, i1, i2);
      r[k] = node_equation_2d(G[k], nodes.P[k], nodes.f[k], nodes.g[k], w,
                              V[k], pr);
    }
  return r;
}

/// Repair pass over the flagged set: every flagged node re-optimizes its
/// first-step loading by direct welfare maximization, walking from the
/// border of the set inward and from small M to large M so that each
/// rollout only crosses already-accurate strategy regions.
inline void skiba_refine_2d(Sfvf2DResult* res, const LakeParams& pr,
                            const SfvfConfig& cfg) {
  if (res->omega.empty()) return;
  const Grid2D& grid = res->grid;
  const int n2 = grid.m.n;

  std::vector<char> in_set(grid.count(), 0);
  for (int k : res->omega) in_set[k] = 1;
  const auto dist = detail::distance_to_complement(grid, in_set);

  std::vector<int> order = res->omega;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    const int ma = a % n2, mb = b % n2;
    if (ma != mb) return ma < mb;
    return a / n2 < b / n2;
  });

  PiecewiseBilinear2D G(grid, res->G);
  for (int k : order) {
    const State2D S{grid.p.node(k / n2), grid.m.node(k % n2)};
    auto objective = [&](double x) {
      return rollout_welfare_2d_first(pr, G, S, cfg.h, cfg.T, x);
    };
    const auto best = maximize_scalar(objective, 1e-4, 10.0, 1e-6);
    // the incumbent stays unless the optimizer strictly improves on it
    if (best.value > objective(G.values[k])) G.values[k] = best.x;
  }
  res->G = G.values;
  res->refined_nodes = static_cast<int>(order.size());
}

/// SFVF iteration for the 2D game (n = 1 gives the cooperative solution):
/// per-iteration dV/dM estimation, node solves, damped rollout value
/// updates, and after convergence the flagged-set repair pass.
inline Sfvf2DResult run_sfvf_2d(const LakeParams& pr, const Grid2D& grid,
                                const SfvfConfig& cfg = {},
                                const std::vector<double>* V_seed = nullptr,
                                const std::vector<double>* G_seed = nullptr) {
  pr.validate();
  grid.p.validate();
  grid.m.validate();
  Sfvf2DResult res;
  res.grid = grid;
  const int N = grid.count();
  const int n2 = grid.m.n;
  const auto nodes = detail::cache_nodes_2d(grid, pr);

  if (V_seed && G_seed) {
    res.V = *V_seed;
    res.G = *G_seed;
  } else {
    initial_guess_2d(grid, pr, cfg, &res.V, &res.G);
  }

  std::vector<double> x_new(N), v_new(N), w(N);
  std::vector<char> flagged(N, 0);
  double dV_prev = std::numeric_limits<double>::infinity();

  for (int j = 0; j < cfg.max_iter; ++j) {
    res.iterations = j + 1;
    const PiecewiseBilinear2D Gold(grid, res.G);

    // Step 2: dV/dM by the three-case stencil
    parallel_for(grid.p.n, [&](int i1) {
      for (int i2 = 0; i2 < n2; ++i2)
        w[grid.index(i1, i2)] = fd_partial_M(grid, res.V, i1, i2);
    });

    // Step 3: node solves. No-solution nodes keep the previous iterate and
    // are flagged; the post-convergence repair pass revisits them.
    parallel_for(N, [&](int k) {
      flagged[k] = 0;
      const double rhs =
          nodes.cP2[k] + pr.n - w[k] * nodes.g[k] + pr.rho * res.V[k];
      const auto roots = detail::node_roots(nodes.f[k], rhs, res.G[k], cfg);
      if (roots.empty()) {
        x_new[k] = res.G[k];
        flagged[k] = 1;
      } else {
        const int i1 = k / n2, i2 = k % n2;
        x_new[k] = detail::select_branch(
            roots, res.G[k], dV_prev, [&](double cand) {
              return rollout_welfare_2d_subcycled_g(
                  pr, NodeOverride2D{Gold, i1, i2, cand}, grid.p.step(),
                  grid.m.step(), {nodes.P[k], nodes.M[k]}, cfg.h, cfg.T);
            });
      }
    });

    const PiecewiseBilinear2D Gnew(grid, x_new);

    // Step 4: damped value update
    parallel_for(N, [&](int k) {
      v_new[k] = rollout_welfare_2d(pr, Gnew, {nodes.P[k], nodes.M[k]}, cfg.h, cfg.T);
    });

    double dV = 0.0, dG = 0.0;
    int n_flagged = 0;
    for (int k = 0; k < N; ++k) {
      const double Vn = std::max(
          cfg.omega * res.V[k] + (1.0 - cfg.omega) * v_new[k],
          nodes.sigma[k] + kSigmaPremium);
      dV = std::max(dV, std::abs(Vn - res.V[k]));
      dG = std::max(dG, std::abs(x_new[k] - res.G[k]));
      res.V[k] = Vn;
      res.G[k] = x_new[k];
      n_flagged += flagged[k];
    }
    if (cfg.diag) cfg.diag({j, dV, dG, n_flagged});
    dV_prev = dV;
    if (dV < cfg.tol_V && dG < cfg.tol_G) {
      res.converged = true;
      break;
    }
  }

  // Step 5 verification, then the Step 6 repair around the flagged set
  res.residual_pre_refine = sfvf_residual_2d(grid, res.V, res.G, pr);
  res.omega.clear();
  for (int k = 0; k < N; ++k)
    if (std::abs(res.residual_pre_refine[k]) > cfg.omega_set_tol)
      res.omega.push_back(k);

  skiba_refine_2d(&res, pr, cfg);
  res.residual = sfvf_residual_2d(grid, res.V, res.G, pr);
  return res;
}

}  // namespace lakegame
