#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "lakegame/bvp.hpp"
#include "lakegame/grid.hpp"
#include "lakegame/lake_model.hpp"
#include "lakegame/params.hpp"
#include "lakegame/quadrature.hpp"
#include "lakegame/steady_states.hpp"

namespace lakegame {

struct OlneConfig {
  double lambda = 0.05;   ///< tau-transform rate
  double t_end = 0.995;   ///< terminal mesh point (tau domain)
  int mesh_points = 400;
  double eps_ss_P = 0.05; ///< terminal acceptance radius in P
  double eps_ss_M = 2.0;  ///< terminal acceptance radius in M (2D)
  double welfare_dt = 0.05;  ///< sampling step for path welfare
  double newton_tol = 1e-8;
};

/// tau-domain system for the 1D open-loop equilibrium, y = (P, L):
///   P' = (L + f(P)) / (lambda (1 - tau))
///   L' = ([f'(P) - rho] L + (2 c P / n) L^2) / (lambda (1 - tau))
/// pinned by P(0) = P0 and L(t_end) = L_ss.
inline BvpProblem assemble_olne_1d(const LakeParams& pr, double P0, double L_ss,
                                   const OlneConfig& cfg = {}) {
  BvpProblem pb;
  pb.dim = 2;
  pb.t_end = cfg.t_end;
  pb.mesh_points = cfg.mesh_points;
  const double lambda = cfg.lambda;
  pb.rhs = [pr, lambda](double tau, const double* y, double* dy) {
    const double P = y[0], L = y[1];
    const double scale = 1.0 / (lambda * (1.0 - tau));
    dy[0] = (L + f_water(P, pr.M_const, pr)) * scale;
    dy[1] = ((f_water_dP(P, pr.M_const, pr) - pr.rho) * L +
             (2.0 * pr.c * P / pr.n) * L * L) *
            scale;
  };
  pb.initial_pins = {{0, P0}};
  pb.terminal_pins = {{1, L_ss}};
  return pb;
}

/// tau-domain system for the 2D open-loop equilibrium, y = (P, M, L, mu),
/// pinned by (P, M)(0) = S0 and (L, mu)(t_end) = (L_ss, mu_ss).
inline BvpProblem assemble_olne_2d(const LakeParams& pr, State2D S0, double L_ss,
                                   double mu_ss, const OlneConfig& cfg = {}) {
  BvpProblem pb;
  pb.dim = 4;
  pb.t_end = cfg.t_end;
  pb.mesh_points = cfg.mesh_points;
  const double lambda = cfg.lambda;
  pb.rhs = [pr, lambda](double tau, const double* y, double* dy) {
    const double P = y[0], M = y[1], L = y[2], mu = y[3];
    const double scale = 1.0 / (lambda * (1.0 - tau));
    double f, g;
    fg_rates(P, M, pr, &f, &g);
    const Partials d = partials(P, M, pr);
    dy[0] = (L + f) * scale;
    dy[1] = g * scale;
    dy[2] = ((d.f_P - pr.rho) * L +
             (2.0 * pr.c * P / pr.n - d.g_P * mu) * L * L) *
            scale;
    dy[3] = ((pr.rho - d.g_M) * mu * L + d.f_M) * scale / L;
  };
  pb.initial_pins = {{0, S0.P}, {1, S0.M}};
  pb.terminal_pins = {{2, L_ss}, {3, mu_ss}};
  return pb;
}

/// The mu equation divides by L, so candidates whose mesh dips to L <= 0
/// are aborted during Newton.
inline BvpOptions olne_2d_options(const OlneConfig& cfg) {
  BvpOptions opt;
  opt.tol = cfg.newton_tol;
  opt.reject = [](const std::vector<double>& y, int nodes, int dim) {
    for (int i = 0; i < nodes; ++i)
      if (y[static_cast<size_t>(i) * dim + 2] <= 0.0) return true;
    return false;
  };
  return opt;
}

/// Per-agent discounted welfare along a solved path: the dense output is
/// sampled uniformly in natural time up to t(t_end) and fed through the
/// trapezoid quadrature with a stationary tail.
inline double olne_path_welfare(const BvpSolution& sol, const LakeParams& pr,
                                const OlneConfig& cfg, int L_component) {
  const TauTransform tt{cfg.lambda};
  const double T = tt.time_of(cfg.t_end);
  const int K = static_cast<int>(std::floor(T / cfg.welfare_dt));
  std::vector<double> u(K + 1);
  for (int k = 0; k <= K; ++k) {
    const double t = k * cfg.welfare_dt;
    const double tau = -std::expm1(-cfg.lambda * t);  // 1 - e^(-lambda t)
    const double P = sol.value(tau, 0);
    const double L = sol.value(tau, L_component);
    u[k] = std::log(std::max(L / pr.n, 1e-10)) - pr.c * P * P;
  }
  return discounted_integral(u, pr.rho, cfg.welfare_dt);
}

struct OlneStart1D {
  double P0 = 0.0;
  bool accepted = false;
  int target = -1;
  double L0 = 0.0;       // total loading at the initial time
  double welfare = -std::numeric_limits<double>::infinity();
  double terminal_P = 0.0;
  int accepted_count = 0;
};

/// Welfare-indifference point between two basins, localized by bisection on
/// the accepted-target identity; both branch loadings and values at the
/// switch are recorded.
struct SkibaPoint {
  double P = 0.0;
  int target_left = -1, target_right = -1;
  double L_left = 0.0, L_right = 0.0;
  double V_left = 0.0, V_right = 0.0;
};

struct Olne1DResult {
  std::vector<SteadyState> roots;  // algebraic steady states
  std::vector<OlneStart1D> starts;
  std::vector<BvpSolution> solutions;  // accepted best per start
  PiecewiseLinear1D loading_fn;        // total initial loading over P0
  PiecewiseLinear1D welfare_fn;        // per-agent welfare over P0
  std::vector<SkibaPoint> skiba;
  std::vector<double> root_welfare;  // path welfare started at each root
  std::vector<char> root_wins;       // target selected by at least one start
};

struct Olne1DProbe {
  bool accepted = false;
  int target = -1;
  double L0 = 0.0;
  double welfare = -std::numeric_limits<double>::infinity();
  std::vector<double> branch_L0;
  std::vector<double> branch_V;
  std::vector<char> branch_ok;
};

/// Solve the 1D problem from a single start against every candidate target
/// and report each branch's initial loading and welfare.
inline Olne1DProbe olne_probe_1d(const LakeParams& pr,
                                 const std::vector<SteadyState>& targets,
                                 double P0, const OlneConfig& cfg) {
  Olne1DProbe pc;
  pc.branch_L0.assign(targets.size(), 0.0);
  pc.branch_V.assign(targets.size(), -std::numeric_limits<double>::infinity());
  pc.branch_ok.assign(targets.size(), 0);
  BvpOptions opt;
  opt.tol = cfg.newton_tol;
  for (size_t t = 0; t < targets.size(); ++t) {
    const BvpProblem pb = assemble_olne_1d(pr, P0, targets[t].L_total, cfg);
    std::vector<double> guess(static_cast<size_t>(pb.mesh_points) * 2);
    for (int i = 0; i < pb.mesh_points; ++i) {
      guess[2 * static_cast<size_t>(i)] = targets[t].P();
      guess[2 * static_cast<size_t>(i) + 1] = targets[t].L_total;
    }
    const BvpSolution sol = solve_bvp(pb, std::move(guess), opt);
    if (!sol.converged) continue;
    if (std::abs(sol.terminal()[0] - targets[t].P()) > cfg.eps_ss_P) continue;
    pc.branch_ok[t] = 1;
    pc.branch_L0[t] = sol.y[1];
    pc.branch_V[t] = olne_path_welfare(sol, pr, cfg, 1);
    if (pc.branch_V[t] > pc.welfare) {
      pc.welfare = pc.branch_V[t];
      pc.target = static_cast<int>(t);
      pc.L0 = sol.y[1];
      pc.accepted = true;
    }
  }
  return pc;
}



/// Full 1D open-loop pipeline: algebraic steady states, sweep over initial
/// states, initial-loading and welfare interpolants, and Skiba switch
/// points localized to 1e-3.
inline Olne1DResult run_olne_1d(const LakeParams& pr, int n_starts = 121,
                                double p_max = 6.0, const OlneConfig& cfg = {}) {
  Olne1DResult out;
  out.roots = olne_steady_1d(pr, p_max);
  const auto& targets = out.roots;

  std::vector<SweepTargetSpec> specs;
  for (const auto& t : targets) {
    SweepTargetSpec sp;
    sp.y_ss = Eigen::VectorXd(2);
    sp.y_ss << t.P(), t.L_total;
    sp.accept_idx = {0};
    sp.accept_tol = {cfg.eps_ss_P};
    specs.push_back(std::move(sp));
  }

  Grid1D start_grid{0.0, p_max, n_starts};
  BvpOptions opt;
  opt.tol = cfg.newton_tol;
  auto entries = bvp_sweep(
      n_starts, specs,
      [&](int s, int t) {
        return assemble_olne_1d(pr, start_grid.node(s), targets[t].L_total, cfg);
      },
      [&](const BvpSolution& sol) { return olne_path_welfare(sol, pr, cfg, 1); },
      opt);

  std::vector<double> L0(n_starts), W(n_starts);
  out.starts.resize(n_starts);
  out.solutions.resize(n_starts);
  for (int s = 0; s < n_starts; ++s) {
    auto& e = entries[s];
    OlneStart1D& r = out.starts[s];
    r.P0 = start_grid.node(s);
    r.accepted = e.target >= 0;
    r.target = e.target;
    r.accepted_count = e.accepted_count;
    if (r.accepted) {
      r.L0 = e.sol.y[1];
      r.welfare = e.welfare;
      r.terminal_P = e.sol.terminal()[0];
      out.solutions[s] = std::move(e.sol);
    }
    L0[s] = r.L0;
    W[s] = r.welfare;
  }
  // interpolants need a value everywhere; carry the nearest accepted
  // neighbour over flagged starts (none on the tested domains)
  for (int s = 0; s < n_starts; ++s) {
    if (out.starts[s].accepted) continue;
    for (int d = 1; d < n_starts; ++d) {
      const int a = s - d, b = s + d;
      if (a >= 0 && out.starts[a].accepted) { L0[s] = L0[a]; W[s] = W[a]; break; }
      if (b < n_starts && out.starts[b].accepted) { L0[s] = L0[b]; W[s] = W[b]; break; }
    }
  }
  out.loading_fn = PiecewiseLinear1D(start_grid, L0);
  out.welfare_fn = PiecewiseLinear1D(start_grid, W);

  out.root_wins.assign(targets.size(), 0);
  for (const auto& s : out.starts)
    if (s.accepted) out.root_wins[s.target] = 1;

  // target switches between adjacent starts -> bisect the switch point
  for (int s = 0; s + 1 < n_starts; ++s) {
    const auto& a = out.starts[s];
    const auto& b = out.starts[s + 1];
    if (!a.accepted || !b.accepted || a.target == b.target) continue;
    double lo = a.P0, hi = b.P0;
    int lo_t = a.target, hi_t = b.target;
    for (int it = 0; it < 14 && hi - lo > 1e-3; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto pc = olne_probe_1d(pr, targets, mid, cfg);
      if (!pc.accepted) break;
      if (pc.target == lo_t) lo = mid;
      else { hi = mid; hi_t = pc.target; }
    }
    SkibaPoint sk;
    sk.P = 0.5 * (lo + hi);
    sk.target_left = lo_t;
    sk.target_right = hi_t;
    const auto pl = olne_probe_1d(pr, targets, lo, cfg);
    const auto ph = olne_probe_1d(pr, targets, hi, cfg);
    if (pl.branch_ok[lo_t]) { sk.L_left = pl.branch_L0[lo_t]; sk.V_left = pl.branch_V[lo_t]; }
    if (ph.branch_ok[hi_t]) { sk.L_right = ph.branch_L0[hi_t]; sk.V_right = ph.branch_V[hi_t]; }
    out.skiba.push_back(sk);
  }

  // welfare of the path started exactly at each root
  out.root_welfare.resize(targets.size());
  for (size_t t = 0; t < targets.size(); ++t) {
    const auto pc = olne_probe_1d(pr, targets, targets[t].P(), cfg);
    out.root_welfare[t] = pc.accepted ? pc.welfare : targets[t].welfare;
  }
  return out;
}

struct OlneStart2D {
  double P0 = 0.0, M0 = 0.0;
  bool accepted = false;
  int target = -1;
  double L0 = 0.0;
  double welfare = -std::numeric_limits<double>::infinity();
  double terminal_P = 0.0, terminal_M = 0.0;
  int accepted_count = 0;
};

/// One point of the loading/welfare discontinuity locus, with both branches.
struct SwitchPoint2D {
  double P = 0.0, M = 0.0;
  int target_left = -1, target_right = -1;
  double L_left = 0.0, L_right = 0.0;
  double V_left = 0.0, V_right = 0.0;
};

struct Olne2DResult {
  std::vector<SteadyState> roots;
  std::vector<OlneStart2D> starts;
  Grid2D start_grid;
  PiecewiseBilinear2D loading_fn;
  PiecewiseBilinear2D welfare_fn;
  std::vector<double> root_welfare;
  std::vector<char> root_wins;          // target selected by at least one start
  std::vector<SwitchPoint2D> switch_rows;  // switch point per start-lattice M-row
  std::vector<SwitchPoint2D> isocline_crossings;  // switch locus meeting Mdot = 0
};

/// Solve from one 2D start against every candidate target and report the
/// per-branch initial loading and welfare.
inline Olne1DProbe olne_probe_2d(const LakeParams& pr,
                                 const std::vector<SteadyState>& targets,
                                 double P0, double M0, const OlneConfig& cfg) {
  Olne1DProbe pc;
  pc.branch_L0.assign(targets.size(), 0.0);
  pc.branch_V.assign(targets.size(), -std::numeric_limits<double>::infinity());
  pc.branch_ok.assign(targets.size(), 0);
  const BvpOptions opt = olne_2d_options(cfg);
  for (size_t t = 0; t < targets.size(); ++t) {
    const double mu = targets[t].costates[1];
    const BvpProblem pb =
        assemble_olne_2d(pr, {P0, M0}, targets[t].L_total, mu, cfg);
    std::vector<double> guess(static_cast<size_t>(pb.mesh_points) * 4);
    for (int i = 0; i < pb.mesh_points; ++i) {
      guess[4 * static_cast<size_t>(i)] = targets[t].P();
      guess[4 * static_cast<size_t>(i) + 1] = targets[t].M();
      guess[4 * static_cast<size_t>(i) + 2] = targets[t].L_total;
      guess[4 * static_cast<size_t>(i) + 3] = mu;
    }
    const BvpSolution sol = solve_bvp(pb, std::move(guess), opt);
    if (!sol.converged) continue;
    if (std::abs(sol.terminal()[0] - targets[t].P()) > cfg.eps_ss_P) continue;
    if (std::abs(sol.terminal()[1] - targets[t].M()) > cfg.eps_ss_M) continue;
    pc.branch_ok[t] = 1;
    pc.branch_L0[t] = sol.y[2];
    pc.branch_V[t] = olne_path_welfare(sol, pr, cfg, 2);
    if (pc.branch_V[t] > pc.welfare) {
      pc.welfare = pc.branch_V[t];
      pc.target = static_cast<int>(t);
      pc.L0 = sol.y[2];
      pc.accepted = true;
    }
  }
  return pc;
}

/// Full 2D open-loop pipeline over a start lattice on
/// [0, p_max] x [m_lo, m_hi].
inline Olne2DResult run_olne_2d(const LakeParams& pr, int np = 31, int nm = 11,
                                double p_max = 6.0, double m_lo = 150.0,
                                double m_hi = 200.0, const OlneConfig& cfg = {}) {
  Olne2DResult out;
  out.roots = olne_steady_2d(pr);
  const auto& targets = out.roots;

  std::vector<SweepTargetSpec> specs;
  for (const auto& t : targets) {
    SweepTargetSpec sp;
    sp.y_ss = Eigen::VectorXd(4);
    sp.y_ss << t.P(), t.M(), t.L_total, t.costates[1];
    sp.accept_idx = {0, 1};
    sp.accept_tol = {cfg.eps_ss_P, cfg.eps_ss_M};
    specs.push_back(std::move(sp));
  }

  out.start_grid = Grid2D{Grid1D{0.0, p_max, np}, Grid1D{m_lo, m_hi, nm}};
  const int n_starts = np * nm;
  const BvpOptions opt = olne_2d_options(cfg);
  auto entries = bvp_sweep(
      n_starts, specs,
      [&](int s, int t) {
        const State2D S0{out.start_grid.p.node(s / nm), out.start_grid.m.node(s % nm)};
        return assemble_olne_2d(pr, S0, targets[t].L_total, targets[t].costates[1], cfg);
      },
      [&](const BvpSolution& sol) { return olne_path_welfare(sol, pr, cfg, 2); },
      opt);

  std::vector<double> L0(n_starts, 0.0), W(n_starts, 0.0);
  out.starts.resize(n_starts);
  for (int s = 0; s < n_starts; ++s) {
    auto& e = entries[s];
    OlneStart2D& r = out.starts[s];
    r.P0 = out.start_grid.p.node(s / nm);
    r.M0 = out.start_grid.m.node(s % nm);
    r.accepted = e.target >= 0;
    r.target = e.target;
    r.accepted_count = e.accepted_count;
    if (r.accepted) {
      r.L0 = e.sol.y[2];
      r.welfare = e.welfare;
      r.terminal_P = e.sol.terminal()[0];
      r.terminal_M = e.sol.terminal()[1];
    }
    L0[s] = r.L0;
    W[s] = r.welfare;
  }
  for (int s = 0; s < n_starts; ++s) {
    if (out.starts[s].accepted) continue;
    double best_d = std::numeric_limits<double>::infinity();
    int best = -1;
    for (int o = 0; o < n_starts; ++o) {
      if (!out.starts[o].accepted) continue;
      const double dp = out.starts[o].P0 - out.starts[s].P0;
      const double dm = (out.starts[o].M0 - out.starts[s].M0) / 10.0;
      const double dd = dp * dp + dm * dm;
      if (dd < best_d) { best_d = dd; best = o; }
    }
    if (best >= 0) { L0[s] = L0[best]; W[s] = W[best]; }
  }
  out.loading_fn = PiecewiseBilinear2D(out.start_grid, L0);
  out.welfare_fn = PiecewiseBilinear2D(out.start_grid, W);

  out.root_wins.assign(targets.size(), 0);
  for (const auto& s : out.starts)
    if (s.accepted) out.root_wins[s.target] = 1;

  // welfare-switch point at a given M between two P-brackets, by bisection
  // on the identity of the best accepted target
  auto bisect_switch = [&](double M, double lo, double hi, int lo_t,
                           int hi_t) -> SwitchPoint2D {
    for (int it = 0; it < 12 && hi - lo > 5e-3; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto pc = olne_probe_2d(pr, targets, mid, M, cfg);
      if (!pc.accepted) break;
      if (pc.target == lo_t) lo = mid;
      else { hi = mid; hi_t = pc.target; }
    }
    SwitchPoint2D sw;
    sw.P = 0.5 * (lo + hi);
    sw.M = M;
    sw.target_left = lo_t;
    sw.target_right = hi_t;
    const auto pl = olne_probe_2d(pr, targets, lo, M, cfg);
    const auto ph = olne_probe_2d(pr, targets, hi, M, cfg);
    if (pl.branch_ok[lo_t]) { sw.L_left = pl.branch_L0[lo_t]; sw.V_left = pl.branch_V[lo_t]; }
    if (ph.branch_ok[hi_t]) { sw.L_right = ph.branch_L0[hi_t]; sw.V_right = ph.branch_V[hi_t]; }
    return sw;
  };

  // one switch per start-lattice M-row (first adjacent target change)
  for (int im = 0; im < nm; ++im) {
    for (int ip = 0; ip + 1 < np; ++ip) {
      const auto& a = out.starts[ip * nm + im];
      const auto& b = out.starts[(ip + 1) * nm + im];
      if (!a.accepted || !b.accepted || a.target == b.target) continue;
      out.switch_rows.push_back(
          bisect_switch(a.M0, a.P0, b.P0, a.target, b.target));
      break;
    }
  }

  // crossing of the switch locus with the Mdot = 0 isocline
  for (size_t j = 0; j + 1 < out.switch_rows.size(); ++j) {
    const auto& a = out.switch_rows[j];
    const auto& b = out.switch_rows[j + 1];
    if (a.target_left != b.target_left || a.target_right != b.target_right)
      continue;
    double ga = g_sediment(a.P, a.M, pr);
    const double gb = g_sediment(b.P, b.M, pr);
    if ((ga < 0.0) == (gb < 0.0)) continue;
    double mlo = a.M, mhi = b.M;
    double plo = a.P, phi = b.P;
    SwitchPoint2D cur = a;
    for (int it = 0; it < 8 && mhi - mlo > 0.2; ++it) {
      const double mm = 0.5 * (mlo + mhi);
      const double span = std::max(0.4, std::abs(phi - plo));
      const double pa = std::min(plo, phi) - 0.5 * span;
      const double pb2 = std::max(plo, phi) + 0.5 * span;
      cur = bisect_switch(mm, std::max(0.0, pa), pb2, a.target_left, a.target_right);
      const double gm = g_sediment(cur.P, cur.M, pr);
      if ((gm < 0.0) == (ga < 0.0)) { mlo = mm; plo = cur.P; ga = gm; }
      else { mhi = mm; phi = cur.P; }
    }
    out.isocline_crossings.push_back(cur);
  }

  out.root_welfare.resize(targets.size());
  for (size_t t = 0; t < targets.size(); ++t) {
    const auto pc = olne_probe_2d(pr, targets, targets[t].P(), targets[t].M(), cfg);
    out.root_welfare[t] = pc.accepted ? pc.welfare : targets[t].welfare;
  }
  return out;
}

/// Residual of the costate relation y = -n/L re-derived along a solved 1D
/// path: max over mesh nodes of |n Ldot / L^2 - (rho y + 2 c P - y f'(P))|,
/// with Ldot taken from the loading equation on the path.
inline double olne_costate_identity_residual(const BvpSolution& sol,
                                             const LakeParams& pr) {
  double worst = 0.0;
  for (int i = 0; i < sol.nodes(); ++i) {
    const double P = sol.y[2 * static_cast<size_t>(i)];
    const double L = sol.y[2 * static_cast<size_t>(i) + 1];
    const double fp = f_water_dP(P, pr.M_const, pr);
    const double Ldot = (fp - pr.rho) * L + (2.0 * pr.c * P / pr.n) * L * L;
    const double y = -pr.n / L;
    const double lhs = pr.n * Ldot / (L * L);
    const double rhs = pr.rho * y + 2.0 * pr.c * P - y * fp;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace lakegame
