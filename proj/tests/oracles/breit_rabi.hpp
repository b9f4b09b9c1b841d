#pragma once

// Closed-form levels of an S = 1/2 electron coupled to nuclear spin I by an
// isotropic hyperfine term, field along z:
//   H = ge B Sz - gn B Iz + A S.I
// Each total projection m mixes |up, m - 1/2> and |down, m + 1/2>.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

inline std::vector<double> breit_rabi_levels(double I, double ge, double gn, double A, double B) {
  std::vector<double> levels;
  const double top = I + 0.5;
  for (double m = -top; m <= top + 1e-9; m += 1.0) {
    if (std::abs(std::abs(m) - top) < 1e-9) {
      // stretched state: single product state
      const double ms = m > 0 ? 0.5 : -0.5;
      const double mi = m - ms;
      levels.push_back(ge * B * ms - gn * B * mi + A * ms * mi);
      continue;
    }
    const double mean = -A / 4.0 - gn * B * m;
    const double half_diff = 0.5 * (ge + gn) * B + 0.5 * A * m;
    const double coupling_sq = 0.25 * A * A * (top * top - m * m);
    const double r = std::sqrt(half_diff * half_diff + coupling_sq);
    levels.push_back(mean - r);
    levels.push_back(mean + r);
  }
  std::sort(levels.begin(), levels.end());
  return levels;
}

}  // namespace oracle
