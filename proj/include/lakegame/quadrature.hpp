#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace lakegame {

/// Present value of a uniformly sampled flow u(t), t = 0, h, ..., Kh:
/// trapezoid rule applied to e^(-rho t) u(t) on [0, Kh], plus the stationary
/// continuation u(Kh) e^(-rho Kh) / rho for the tail beyond the horizon.
inline double discounted_integral(std::span<const double> u, double rho, double h) {
  if (u.size() < 2) throw std::invalid_argument("discounted_integral: need at least two samples");
  const std::size_t K = u.size() - 1;
  const double decay = std::exp(-rho * h);
  double disc = 1.0;
  double acc = 0.0;
  for (std::size_t k = 0; k <= K; ++k) {
    const double w = (k == 0 || k == K) ? 0.5 : 1.0;
    acc += w * disc * u[k];
    if (k < K) disc *= decay;
  }
  return acc * h + u[K] * disc / rho;
}

}  // namespace lakegame
