#pragma once

// Initial velocities for control runs.

#include <cmath>

#include "lsqctrl/grid.hpp"
#include "lsqctrl/stokes_control.hpp"

namespace lsqctrl {

/// Velocity (psi_y, -psi_x) of psi = A 256 s^2 (1-s)^2 r^2 (1-r)^2, s = x/Lx, r = y/Ly,
/// sampled pointwise at the faces. It vanishes on the wall and is divergence free
/// only up to the O(h^2) sampling error, unlike the discrete curl of psi.
inline VectorXd polynomial_bump_velocity(const Grid2& g, double amplitude = 1.0) {
  const double lx = g.lx(), ly = g.ly();
  auto b = [](double s) { return s * s * (1 - s) * (1 - s); };
  auto db = [](double s) { return 2 * s * (1 - s) * (1 - 2 * s); };
  const double a = 256 * amplitude;
  return sample_wall_velocity(
      g, [&](double x, double y) { return a * b(x / lx) * db(y / ly) / ly; },
      [&](double x, double y) { return -a * db(x / lx) * b(y / ly) / lx; });
}

}  // namespace lsqctrl
