#pragma once

// Rotation angle of a resonant spin driven through a cavity by a square pulse
// switched on at t = 0, with no spin back-action: the field rings up as
// a_ss (1 - exp(-kappa_l t / 2)) and the spin turns at 2 g |a|.

#include <cmath>

namespace oracle {

inline double driven_rabi_angle(double g, double a_ss, double kappa_l, double t) {
  return 2.0 * g * a_ss * (t - (2.0 / kappa_l) * (1.0 - std::exp(-0.5 * kappa_l * t)));
}

}  // namespace oracle
