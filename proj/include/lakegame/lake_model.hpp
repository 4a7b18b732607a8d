#pragma once

#include <cmath>
#include <stdexcept>

#include "lakegame/params.hpp"

namespace lakegame {

namespace detail {

// p^alpha with fast paths for the exponents that occur in practice.
inline double pow_alpha(double p, double alpha) {
  if (alpha == 2.0) return p * p;
  if (alpha == 8.0) {
    const double p2 = p * p, p4 = p2 * p2;
    return p4 * p4;
  }
  return std::pow(p, alpha);
}

}  // namespace detail

/// Holling type-III recycling response P^a / (P^a + q^a), in [0, 1).
inline double recycle_fraction(double P, const LakeParams& pr) {
  if (P <= 0.0) return 0.0;
  const double pa = detail::pow_alpha(P, pr.alpha);
  const double qa = detail::pow_alpha(pr.q, pr.alpha);
  return pa / (pa + qa);
}

/// d/dP of recycle_fraction: a P^(a-1) q^a / (P^a + q^a)^2.
inline double recycle_fraction_dP(double P, const LakeParams& pr) {
  const double qa = detail::pow_alpha(pr.q, pr.alpha);
  if (P <= 0.0) return pr.alpha == 1.0 ? 1.0 / qa : 0.0;
  const double pa = detail::pow_alpha(P, pr.alpha);
  const double sum = pa + qa;
  return pr.alpha * (pa / P) * qa / (sum * sum);
}

/// Drift of water phosphorus excluding loading:
///   f(P, M) = -(s + varsigma) P + r M P^a / (P^a + q^a).
inline double f_water(double P, double M, const LakeParams& pr) {
  return -(pr.s + pr.varsigma) * P + pr.r * M * recycle_fraction(P, pr);
}

/// Drift of sediment phosphorus:
///   g(P, M) = s P - eta M - r M P^a / (P^a + q^a).
inline double g_sediment(double P, double M, const LakeParams& pr) {
  return pr.s * P - pr.eta * M - pr.r * M * recycle_fraction(P, pr);
}

// Both drifts with the recycling term evaluated once.
inline void fg_rates(double P, double M, const LakeParams& pr, double* f, double* g) {
  const double rec = pr.r * M * recycle_fraction(P, pr);
  *f = -(pr.s + pr.varsigma) * P + rec;
  *g = pr.s * P - pr.eta * M - rec;
}

/// Analytic first partials of (f, g) with respect to (P, M).
struct Partials {
  double f_P;
  double f_M;
  double g_P;
  double g_M;
};

inline Partials partials(double P, double M, const LakeParams& pr) {
  const double frac = recycle_fraction(P, pr);
  const double dfrac = recycle_fraction_dP(P, pr);
  Partials d;
  d.f_P = -(pr.s + pr.varsigma) + pr.r * M * dfrac;
  d.f_M = pr.r * frac;
  d.g_P = pr.s - pr.r * M * dfrac;
  d.g_M = -pr.eta - pr.r * frac;
  return d;
}

/// Slope of the 1D drift f(P) at fixed sediment density M.
inline double f_water_dP(double P, double M, const LakeParams& pr) {
  return -(pr.s + pr.varsigma) + pr.r * M * recycle_fraction_dP(P, pr);
}

/// Instantaneous utility of one agent: ln(L_agent) - c P^2.
inline double utility(double L_agent, double P, const LakeParams& pr) {
  if (!(L_agent > 0.0))
    throw std::domain_error("utility: loading must be positive");
  return std::log(L_agent) - pr.c * P * P;
}

/// Per-agent welfare of staying forever at (P, L_total):
///   (ln(L_total / n) - c P^2) / rho.
inline double stationary_welfare(double P, double L_total, const LakeParams& pr) {
  return utility(L_total / pr.n, P, pr) / pr.rho;
}

/// Dimensionless reduced form of the water equation:
///   x' = u - b x + x^2 / (x^2 + 1).
inline double reduced_drift(double x, double u, double b) {
  return u - b * x + (x * x) / (x * x + 1.0);
}

}  // namespace lakegame
