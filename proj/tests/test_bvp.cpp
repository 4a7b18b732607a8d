#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lakegame/bvp.hpp"
#include "lakegame/lake_model.hpp"
#include "lakegame/olne.hpp"
#include "lakegame/steady_states.hpp"

using namespace lakegame;

namespace {

// exponential decay embedded in tau: y'(tau) = -y * dt/dtau, exact solution
// y(tau) = exp(-t(tau)) = (1 - tau)^(1/lambda)
double decay_error(double lambda, int mesh) {
  const double t_end = 0.995;
  BvpProblem pb;
  pb.dim = 1;
  pb.t_end = t_end;
  pb.mesh_points = mesh;
  pb.rhs = [lambda](double tau, const double* y, double* dy) {
    dy[0] = -y[0] / (lambda * (1.0 - tau));
  };
  const TauTransform tt{lambda};
  // the decaying component must be pinned at the start; a terminal pin
  // would condition the problem like backward shooting through e^(t_end)
  pb.initial_pins = {{0, 1.0}};
  std::vector<double> guess(mesh, 0.5);
  const BvpSolution sol = solve_bvp(pb, guess);
  REQUIRE(sol.converged);
  double worst = 0.0;
  const int probes = 10 * mesh;
  for (int i = 0; i <= probes; ++i) {
    const double tau = t_end * i / probes;
    const double exact = std::exp(-tt.time_of(tau));
    worst = std::max(worst, std::abs(sol.value(tau, 0) - exact));
  }
  return worst;
}

}  // namespace

TEST_CASE("tau transform") {
  TauTransform tt{0.05};
  CHECK(tt.time_of(0.0) == 0.0);
  CHECK(tt.time_of(0.99) == Catch::Approx(-std::log(0.01) / 0.05).epsilon(1e-12));
  CHECK(tt.dt_dtau(0.0) == Catch::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("linear decay: accuracy and fourth-order mesh convergence") {
  const double e400 = decay_error(0.05, 400);
  CHECK(e400 < 1e-6);
  const double e800 = decay_error(0.05, 799);  // halved interval width
  const double ratio = e400 / e800;
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("harmonic oscillator through a linear map") {
  // y1' = y2, y2' = -y1 on t in [0, pi/2]; tau = t / (pi/2)
  const double span = std::atan(1.0) * 2.0;  // pi/2
  BvpProblem pb;
  pb.dim = 2;
  pb.t_end = 1.0;
  pb.mesh_points = 200;
  pb.rhs = [span](double, const double* y, double* dy) {
    dy[0] = span * y[1];
    dy[1] = -span * y[0];
  };
  // pin the same component at both ends so the amplitude is determined:
  // y1(0) = sin(0) = 0 and y1(1) = sin(pi/2) = 1
  pb.initial_pins = {{0, 0.0}};
  pb.terminal_pins = {{0, 1.0}};
  std::vector<double> guess(static_cast<size_t>(pb.mesh_points) * 2, 0.5);
  const BvpSolution sol = solve_bvp(pb, guess);
  REQUIRE(sol.converged);
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double tau = i / 1000.0;
    worst = std::max(worst, std::abs(sol.value(tau, 0) - std::sin(span * tau)));
    worst = std::max(worst, std::abs(sol.value(tau, 1) - std::cos(span * tau)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("steady-state start returns the constant solution") {
  LakeParams pr;
  pr.n = 2;
  pr.M_const = 179.0;
  const auto roots = olne_steady_1d(pr);
  REQUIRE_FALSE(roots.empty());
  const auto& ss = roots.front();
  const BvpProblem pb = assemble_olne_1d(pr, ss.P(), ss.L_total);
  std::vector<double> guess(static_cast<size_t>(pb.mesh_points) * 2);
  for (int i = 0; i < pb.mesh_points; ++i) {
    guess[2 * static_cast<size_t>(i)] = ss.P();
    guess[2 * static_cast<size_t>(i) + 1] = ss.L_total;
  }
  const BvpSolution sol = solve_bvp(pb, guess);
  REQUIRE(sol.converged);
  for (int i = 0; i < pb.mesh_points; ++i) {
    CHECK(std::abs(sol.y[2 * static_cast<size_t>(i)] - ss.P()) < 1e-9);
    CHECK(std::abs(sol.y[2 * static_cast<size_t>(i) + 1] - ss.L_total) < 1e-9);
  }
}

TEST_CASE("sweep accepts a stationary start with stationary welfare") {
  LakeParams pr;
  pr.n = 2;
  pr.M_const = 179.0;
  const auto roots = olne_steady_1d(pr);
  std::vector<SweepTargetSpec> specs;
  for (const auto& t : roots) {
    SweepTargetSpec sp;
    sp.y_ss = Eigen::VectorXd(2);
    sp.y_ss << t.P(), t.L_total;
    sp.accept_idx = {0};
    sp.accept_tol = {0.05};
    specs.push_back(sp);
  }
  OlneConfig cfg;
  // one start exactly at the first (stable) root
  auto entries = bvp_sweep(
      1, specs,
      [&](int, int t) {
        return assemble_olne_1d(pr, roots[0].P(), roots[t].L_total, cfg);
      },
      [&](const BvpSolution& sol) { return olne_path_welfare(sol, pr, cfg, 1); });
  REQUIRE(entries[0].target >= 0);
  const double stat = stationary_welfare(roots[0].P(), roots[0].L_total, pr);
  CHECK(entries[0].welfare == Catch::Approx(stat).epsilon(5e-3));
}
