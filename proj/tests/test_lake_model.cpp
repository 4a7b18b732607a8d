#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lakegame/lake_model.hpp"

using namespace lakegame;

namespace {

LakeParams base_params(int n = 1, double M = 179.0) {
  LakeParams pr;
  pr.n = n;
  pr.M_const = M;
  return pr;
}

// central finite difference oracle
template <class F>
double fd_central(F&& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("recycle fraction basics") {
  const LakeParams pr = base_params();
  CHECK(recycle_fraction(0.0, pr) == 0.0);
  CHECK(recycle_fraction(2.4, pr) == Catch::Approx(0.5).margin(1e-15));
  // direct arithmetic: 0.85^2 / (0.85^2 + 2.4^2)
  const double expect = 0.7225 / 6.4825;
  CHECK(recycle_fraction(0.85, pr) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("recycle fraction bounded and nondecreasing for alpha >= 1") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> up(0.0, 8.0);
  for (double alpha : {1.0, 2.0, 3.5, 8.0}) {
    LakeParams pr = base_params();
    pr.alpha = alpha;
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
      const double P = 8.0 * i / 200.0;
      const double v = recycle_fraction(P, pr);
      CHECK(v >= 0.0);
      CHECK(v < 1.0);
      CHECK(v >= prev);
      prev = v;
    }
    (void)up;
  }
}

TEST_CASE("water drift values") {
  const LakeParams pr = base_params();
  CHECK(f_water(0.0, 179.0, pr) == 0.0);
  // -0.85 * 0.85 + 0.019 * 179 * (0.7225 / 6.4825); Table 1 cross-check:
  // the cooperative 1D steady state at M=179 carries L* = -f(P*) ~ 0.34
  const double expect = -0.85 * 0.85 + 0.019 * 179.0 * (0.7225 / 6.4825);
  CHECK(f_water(0.85, 179.0, pr) == Catch::Approx(expect).epsilon(1e-14));
  CHECK(f_water(0.85, 179.0, pr) == Catch::Approx(-0.3434).margin(5e-4));
  CHECK(f_water(0.774, 194.2, pr) == Catch::Approx(-0.3103).margin(5e-4));
}

TEST_CASE("sediment drift values") {
  const LakeParams pr = base_params();
  CHECK(g_sediment(0.0, 0.0, pr) == 0.0);
  CHECK(g_sediment(1.0, 0.0, pr) == Catch::Approx(0.7).epsilon(1e-15));
  // reported 2D cooperative steady state sits on the Mdot = 0 isocline
  CHECK(std::abs(g_sediment(0.774, 194.2, pr)) < 1e-3);
}

TEST_CASE("analytic partials") {
  const LakeParams pr = base_params();
  CHECK(partials(0.0, 57.0, pr).f_M == 0.0);
  CHECK(partials(0.85, 179.0, pr).f_P == Catch::Approx(-0.0575).margin(2e-3));

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> up(0.1, 6.0);
  std::uniform_real_distribution<double> um(120.0, 260.0);
  for (int k = 0; k < 10; ++k) {
    const double P = up(rng), M = um(rng);
    const Partials d = partials(P, M, pr);
    const double fP = fd_central([&](double x) { return f_water(x, M, pr); }, P);
    const double fM = fd_central([&](double x) { return f_water(P, x, pr); }, M);
    const double gP = fd_central([&](double x) { return g_sediment(x, M, pr); }, P);
    const double gM = fd_central([&](double x) { return g_sediment(P, x, pr); }, M);
    CHECK(d.f_P == Catch::Approx(fP).epsilon(1e-6));
    CHECK(d.f_M == Catch::Approx(fM).epsilon(1e-6));
    CHECK(d.g_P == Catch::Approx(gP).epsilon(1e-6));
    CHECK(d.g_M == Catch::Approx(gM).epsilon(1e-6));
  }
}

TEST_CASE("utility") {
  const LakeParams pr = base_params();
  CHECK(utility(1.0, 0.0, pr) == 0.0);
  CHECK(utility(std::exp(1.0), 0.0, pr) == Catch::Approx(1.0).epsilon(1e-14));
  const double expect = std::log(0.17) - 0.1736 * 0.85 * 0.85;
  CHECK(utility(0.17, 0.85, pr) == Catch::Approx(expect).epsilon(1e-14));
  CHECK(utility(0.17, 0.85, pr) == Catch::Approx(-1.8974).margin(5e-4));
  CHECK_THROWS_AS(utility(0.0, 1.0, pr), std::domain_error);
  CHECK_THROWS_AS(utility(-0.3, 1.0, pr), std::domain_error);
}

TEST_CASE("reduced drift") {
  CHECK(reduced_drift(0.0, 0.0, 0.7) == 0.0);
  CHECK(reduced_drift(1.0, 0.0, 0.5) == Catch::Approx(0.0).margin(1e-15));
  CHECK(reduced_drift(1.0, 0.1, 0.6) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("mass balance cancels the sedimentation and recycling terms") {
  const LakeParams pr = base_params();
  std::mt19937 rng(123);
  std::uniform_real_distribution<double> up(0.0, 6.0);
  std::uniform_real_distribution<double> um(100.0, 300.0);
  std::uniform_real_distribution<double> ul(0.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const double P = up(rng), M = um(rng), L = ul(rng);
    const double lhs = L + f_water(P, M, pr) + g_sediment(P, M, pr);
    const double rhs = L - pr.varsigma * P - pr.eta * M;
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("parameter validation") {
  LakeParams pr = base_params();
  CHECK_NOTHROW(pr.validate());
  pr.alpha = 0.5;
  CHECK_THROWS_AS(pr.validate(), std::invalid_argument);
  pr = base_params();
  pr.n = 0;
  CHECK_THROWS_AS(pr.validate(), std::invalid_argument);
  pr = base_params();
  pr.rho = 0.0;
  CHECK_THROWS_AS(pr.validate(), std::invalid_argument);
}
