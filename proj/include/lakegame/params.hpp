#pragma once

#include <stdexcept>
#include <string>

namespace lakegame {

/// Model constants for the phosphorus dynamics and the agents' objective.
/// Defaults are the Lake Mendota calibration with a quadratic Holling
/// response and the baseline discount rate used by the regression fixtures.
struct LakeParams {
  double s = 0.7;         ///< sedimentation rate (1/time)
  double varsigma = 0.15; ///< outflow rate (1/time)
  double eta = 0.001;     ///< permanent burial rate (1/time)
  double r = 0.019;       ///< maximum recycling rate (1/time)
  double q = 2.4;         ///< recycling half-saturation (density)
  double alpha = 2.0;     ///< Holling exponent, >= 1
  double c = 0.1736;      ///< damage weight (utility per density^2)
  double rho = 0.043;     ///< discount rate (1/time)
  int n = 1;              ///< number of agents, >= 1
  double M_const = 179.0; ///< sediment density held fixed in the 1D model

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0))
        throw std::invalid_argument(std::string(name) + " must be > 0");
    };
    positive(s, "s");
    positive(varsigma, "varsigma");
    positive(eta, "eta");
    positive(r, "r");
    positive(q, "q");
    positive(rho, "rho");
    positive(M_const, "M");
    if (!(alpha >= 1.0)) throw std::invalid_argument("alpha must be >= 1");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
  }
};

/// Lake state: phosphorus density in the water column and in the sediment.
struct State2D {
  double P = 0.0;
  double M = 0.0;
};

/// Loading pair under symmetric play: L_total = n * L_agent.
struct Controls {
  double L_total = 0.0;
  double L_agent = 0.0;
};

}  // namespace lakegame
