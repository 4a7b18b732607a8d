#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "lakegame/parallel.hpp"

namespace lakegame {

/// Time normalization tau = 1 - exp(-lambda t), mapping [0, inf) onto [0, 1).
struct TauTransform {
  double lambda = 0.05;

  double time_of(double tau) const { return -std::log1p(-tau) / lambda; }
  double dt_dtau(double tau) const { return 1.0 / (lambda * (1.0 - tau)); }
};

/// First-order system y'(tau) = rhs(tau, y) on [0, t_end] with component
/// pins at both ends. Together the pin lists must contain dim entries.
struct BvpProblem {
  int dim = 0;
  std::function<void(double, const double*, double*)> rhs;
  std::vector<std::pair<int, double>> initial_pins;   // y[k](0) = value
  std::vector<std::pair<int, double>> terminal_pins;  // y[k](t_end) = value
  double t_end = 0.995;
  int mesh_points = 400;
};

struct BvpOptions {
  double tol = 1e-8;
  int max_newton = 40;
  int max_halvings = 40;
  double fd_eps = 1e-7;
  /// Optional veto on accepted iterates (e.g. positivity of a component).
  std::function<bool(const std::vector<double>& y_flat, int nodes, int dim)> reject;
};

/// Collocation solution on the fixed mesh with cubic-Hermite dense output.
struct BvpSolution {
  int dim = 0;
  double t_end = 0.0;
  std::vector<double> tau;  // mesh nodes
  std::vector<double> y;    // node values, y[i * dim + k]
  std::vector<double> yp;   // node derivatives rhs(tau_i, y_i)
  bool converged = false;
  bool rejected = false;
  double residual = std::numeric_limits<double>::infinity();
  int newton_iterations = 0;
  int worst_interval = -1;

  int nodes() const { return static_cast<int>(tau.size()); }

  double value(double t, int k) const {
    const int n = nodes();
    const double h = t_end / (n - 1);
    int cell = static_cast<int>(std::floor(t / h));
    cell = std::clamp(cell, 0, n - 2);
    const double th = (t - cell * h) / h;
    const double th2 = th * th, th3 = th2 * th;
    const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
    const double h10 = th3 - 2.0 * th2 + th;
    const double h01 = -2.0 * th3 + 3.0 * th2;
    const double h11 = th3 - th2;
    const int a = cell * dim + k, b = (cell + 1) * dim + k;
    return h00 * y[a] + h10 * h * yp[a] + h01 * y[b] + h11 * h * yp[b];
  }

  Eigen::VectorXd eval(double t) const {
    Eigen::VectorXd v(dim);
    for (int k = 0; k < dim; ++k) v[k] = value(t, k);
    return v;
  }

  Eigen::VectorXd terminal() const {
    Eigen::VectorXd v(dim);
    const int base = (nodes() - 1) * dim;
    for (int k = 0; k < dim; ++k) v[k] = y[base + k];
    return v;
  }
};

namespace detail {

// Residual of the 3-stage Lobatto-IIIA (Simpson) collocation scheme plus the
// boundary rows. Row layout: initial pins, then dim rows per interval, then
// terminal pins. Also refreshes the node derivative cache.
inline void bvp_residual(const BvpProblem& pb, const std::vector<double>& y,
                         std::vector<double>& fnode, std::vector<double>& work,
                         Eigen::VectorXd& R) {
  const int d = pb.dim;
  const int n = pb.mesh_points;
  const int N = n - 1;
  const double h = pb.t_end / N;
  fnode.resize(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    pb.rhs(i * h, y.data() + static_cast<size_t>(i) * d, fnode.data() + static_cast<size_t>(i) * d);

  R.resize(static_cast<long>(N) * d + d);
  const int n_init = static_cast<int>(pb.initial_pins.size());
  for (int j = 0; j < n_init; ++j)
    R[j] = y[pb.initial_pins[j].first] - pb.initial_pins[j].second;

  work.resize(2 * static_cast<size_t>(d));
  double* ymid = work.data();
  double* fmid = work.data() + d;
  for (int i = 0; i < N; ++i) {
    const double* yi = y.data() + static_cast<size_t>(i) * d;
    const double* yj = yi + d;
    const double* fi = fnode.data() + static_cast<size_t>(i) * d;
    const double* fj = fi + d;
    for (int k = 0; k < d; ++k)
      ymid[k] = 0.5 * (yi[k] + yj[k]) - (h / 8.0) * (fj[k] - fi[k]);
    pb.rhs((i + 0.5) * h, ymid, fmid);
    for (int k = 0; k < d; ++k)
      R[n_init + static_cast<long>(i) * d + k] =
          yj[k] - yi[k] - (h / 6.0) * (fi[k] + 4.0 * fmid[k] + fj[k]);
  }

  const long base = n_init + static_cast<long>(N) * d;
  for (size_t j = 0; j < pb.terminal_pins.size(); ++j)
    R[base + static_cast<long>(j)] =
        y[static_cast<size_t>(N) * d + pb.terminal_pins[j].first] - pb.terminal_pins[j].second;
}

// d(rhs)/dy at (t, y0) by forward differences.
inline void rhs_jacobian(const BvpProblem& pb, double t, const double* y0,
                         const double* f0, double eps, Eigen::MatrixXd& A,
                         std::vector<double>& scratch) {
  const int d = pb.dim;
  scratch.resize(2 * static_cast<size_t>(d));
  double* yp = scratch.data();
  double* fp = scratch.data() + d;
  for (int k = 0; k < d; ++k) yp[k] = y0[k];
  for (int j = 0; j < d; ++j) {
    const double hj = eps * std::max(1.0, std::abs(y0[j]));
    yp[j] = y0[j] + hj;
    pb.rhs(t, yp, fp);
    for (int k = 0; k < d; ++k) A(k, j) = (fp[k] - f0[k]) / hj;
    yp[j] = y0[j];
  }
}

}  // namespace detail

/// Damped-Newton solve of the collocation equations from a guess given on
/// the mesh (flat, node-major). On failure the worst mesh interval is
/// reported in the solution diagnostics.
inline BvpSolution solve_bvp(const BvpProblem& pb, std::vector<double> guess,
                             const BvpOptions& opt = {}) {
  const int d = pb.dim;
  const int n = pb.mesh_points;
  const int N = n - 1;
  const double h = pb.t_end / N;
  const int n_init = static_cast<int>(pb.initial_pins.size());

  BvpSolution sol;
  sol.dim = d;
  sol.t_end = pb.t_end;
  sol.tau.resize(n);
  for (int i = 0; i < n; ++i) sol.tau[i] = i * h;
  sol.y = std::move(guess);

  if (static_cast<int>(sol.y.size()) != n * d ||
      n_init + static_cast<int>(pb.terminal_pins.size()) != d)
    return sol;
  if (opt.reject && opt.reject(sol.y, n, d)) {
    sol.rejected = true;
    return sol;
  }

  std::vector<double> fnode, work, scratch;
  Eigen::VectorXd R;
  detail::bvp_residual(pb, sol.y, fnode, work, R);
  double norm = R.lpNorm<Eigen::Infinity>();

  Eigen::MatrixXd Ai(d, d), Aj(d, d), Am(d, d), Bi(d, d), Bj(d, d), Mi(d, d);
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SparseMatrix<double> J(n * d, n * d);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  std::vector<double> ymid(d), fmid(d);

  auto record_worst = [&]() {
    int worst = -1;
    double w = -1.0;
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < d; ++k) {
        const double v = std::abs(R[n_init + static_cast<long>(i) * d + k]);
        if (v > w) {
          w = v;
          worst = i;
        }
      }
    sol.worst_interval = worst;
  };

  for (int it = 0; it < opt.max_newton; ++it) {
    sol.newton_iterations = it;
    if (std::isfinite(norm) && norm < opt.tol) {
      sol.converged = true;
      break;
    }
    if (!std::isfinite(norm)) break;

    trips.clear();
    for (int j = 0; j < n_init; ++j)
      trips.emplace_back(j, pb.initial_pins[j].first, 1.0);
    bool assembly_ok = true;
    for (int i = 0; i < N && assembly_ok; ++i) {
      const double* yi = sol.y.data() + static_cast<size_t>(i) * d;
      const double* yj = yi + d;
      const double* fi = fnode.data() + static_cast<size_t>(i) * d;
      const double* fj = fi + d;
      for (int k = 0; k < d; ++k)
        ymid[k] = 0.5 * (yi[k] + yj[k]) - (h / 8.0) * (fj[k] - fi[k]);
      pb.rhs((i + 0.5) * h, ymid.data(), fmid.data());
      detail::rhs_jacobian(pb, i * h, yi, fi, opt.fd_eps, Ai, scratch);
      detail::rhs_jacobian(pb, (i + 1) * h, yj, fj, opt.fd_eps, Aj, scratch);
      detail::rhs_jacobian(pb, (i + 0.5) * h, ymid.data(), fmid.data(), opt.fd_eps, Am, scratch);
      if (!Ai.allFinite() || !Aj.allFinite() || !Am.allFinite()) {
        assembly_ok = false;
        break;
      }
      // d(ymid)/dyi = I/2 + (h/8) Ai ; d(ymid)/dyj = I/2 - (h/8) Aj
      Mi = 0.5 * Eigen::MatrixXd::Identity(d, d) + (h / 8.0) * Ai;
      Bi = -Eigen::MatrixXd::Identity(d, d) - (h / 6.0) * (Ai + 4.0 * Am * Mi);
      Mi = 0.5 * Eigen::MatrixXd::Identity(d, d) - (h / 8.0) * Aj;
      Bj = Eigen::MatrixXd::Identity(d, d) - (h / 6.0) * (Aj + 4.0 * Am * Mi);
      const long row0 = n_init + static_cast<long>(i) * d;
      for (int rr = 0; rr < d; ++rr)
        for (int cc = 0; cc < d; ++cc) {
          trips.emplace_back(row0 + rr, static_cast<long>(i) * d + cc, Bi(rr, cc));
          trips.emplace_back(row0 + rr, static_cast<long>(i + 1) * d + cc, Bj(rr, cc));
        }
    }
    if (!assembly_ok) break;
    const long tbase = n_init + static_cast<long>(N) * d;
    for (size_t j = 0; j < pb.terminal_pins.size(); ++j)
      trips.emplace_back(tbase + static_cast<long>(j),
                         static_cast<long>(N) * d + pb.terminal_pins[j].first, 1.0);

    J.setFromTriplets(trips.begin(), trips.end());
    lu.compute(J);
    if (lu.info() != Eigen::Success) break;
    const Eigen::VectorXd dy = lu.solve(-R);
    if (!dy.allFinite()) break;

    double step = 1.0;
    bool improved = false;
    std::vector<double> y_try(sol.y.size());
    Eigen::VectorXd R_try;
    std::vector<double> f_try;
    for (int hv = 0; hv <= opt.max_halvings; ++hv) {
      for (size_t kk = 0; kk < sol.y.size(); ++kk)
        y_try[kk] = sol.y[kk] + step * dy[static_cast<long>(kk)];
      if (opt.reject && opt.reject(y_try, n, d)) {
        step *= 0.5;
        continue;
      }
      detail::bvp_residual(pb, y_try, f_try, work, R_try);
      const double nn = R_try.lpNorm<Eigen::Infinity>();
      if (std::isfinite(nn) && (nn < norm || nn < opt.tol)) {
        sol.y.swap(y_try);
        fnode.swap(f_try);
        R.swap(R_try);
        norm = nn;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }

  sol.residual = norm;
  sol.converged = std::isfinite(norm) && norm < opt.tol;
  if (!sol.converged) record_worst();
  sol.yp = std::move(fnode);
  return sol;
}

/// One candidate terminal steady state for a sweep: the full variable vector
/// at the steady state plus which components must land within which radius
/// for the solve to count as reaching it.
struct SweepTargetSpec {
  Eigen::VectorXd y_ss;
  std::vector<int> accept_idx;
  std::vector<double> accept_tol;
};

struct SweepEntry {
  int target = -1;  // accepted target index, -1 if none
  double welfare = -std::numeric_limits<double>::infinity();
  int accepted_count = 0;
  std::vector<char> target_ok;
  std::vector<double> target_welfare;
  BvpSolution sol;  // best accepted solution
};

/// Sweep over starts and candidate targets. Primary solves are seeded with
/// the constant steady-state guess and run in parallel; failed (start,
/// target) pairs are retried sequentially with the nearest neighbour's
/// accepted solution as guess (ascending, then descending). Among accepted
/// candidates the highest welfare wins; ties keep the lowest target index.
template <class MakeProblem, class WelfareFn>
std::vector<SweepEntry> bvp_sweep(int n_starts,
                                  const std::vector<SweepTargetSpec>& targets,
                                  MakeProblem&& make_problem,
                                  WelfareFn&& welfare_of,
                                  const BvpOptions& opt = {}) {
  const int n_targets = static_cast<int>(targets.size());
  std::vector<SweepEntry> entries(n_starts);
  for (auto& e : entries) {
    e.target_ok.assign(n_targets, 0);
    e.target_welfare.assign(n_targets, -std::numeric_limits<double>::infinity());
  }
  // best accepted solution per (start, target); retries read neighbours
  std::vector<std::vector<BvpSolution>> sols(
      n_starts, std::vector<BvpSolution>(n_targets));

  auto accepted = [&](const BvpSolution& s, const SweepTargetSpec& tg) {
    if (!s.converged) return false;
    const Eigen::VectorXd yT = s.terminal();
    for (size_t j = 0; j < tg.accept_idx.size(); ++j)
      if (std::abs(yT[tg.accept_idx[j]] - tg.y_ss[tg.accept_idx[j]]) > tg.accept_tol[j])
        return false;
    return true;
  };

  auto run_one = [&](int s, int t, const std::vector<double>* seed) {
    const BvpProblem pb = make_problem(s, t);
    std::vector<double> guess;
    if (seed) {
      guess = *seed;
    } else {
      guess.resize(static_cast<size_t>(pb.mesh_points) * pb.dim);
      for (int i = 0; i < pb.mesh_points; ++i)
        for (int k = 0; k < pb.dim; ++k)
          guess[static_cast<size_t>(i) * pb.dim + k] = targets[t].y_ss[k];
    }
    BvpSolution sol = solve_bvp(pb, std::move(guess), opt);
    if (accepted(sol, targets[t])) {
      entries[s].target_ok[t] = 1;
      entries[s].target_welfare[t] = welfare_of(sol);
      sols[s][t] = std::move(sol);
      return true;
    }
    return false;
  };

  parallel_for(n_starts * n_targets, [&](int idx) {
    run_one(idx / n_targets, idx % n_targets, nullptr);
  });

  // neighbour-seeded retries
  for (int s = 1; s < n_starts; ++s)
    for (int t = 0; t < n_targets; ++t)
      if (!entries[s].target_ok[t] && entries[s - 1].target_ok[t])
        run_one(s, t, &sols[s - 1][t].y);
  for (int s = n_starts - 2; s >= 0; --s)
    for (int t = 0; t < n_targets; ++t)
      if (!entries[s].target_ok[t] && entries[s + 1].target_ok[t])
        run_one(s, t, &sols[s + 1][t].y);

  for (int s = 0; s < n_starts; ++s) {
    auto& e = entries[s];
    for (int t = 0; t < n_targets; ++t) {
      if (!e.target_ok[t]) continue;
      ++e.accepted_count;
      if (e.target_welfare[t] > e.welfare) {
        e.welfare = e.target_welfare[t];
        e.target = t;
      }
    }
    if (e.target >= 0) e.sol = std::move(sols[s][e.target]);
  }
  return entries;
}

}  // namespace lakegame
