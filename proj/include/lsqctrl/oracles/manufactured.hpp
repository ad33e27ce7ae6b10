#pragma once

// Manufactured solutions from a separable stream function
//   psi(x, y, t) = theta(t) X(x) Y(y),  X = sin^2(pi x / Lx),  Y = sin^2(pi y / Ly),
// so y = (psi_y, -psi_x) is divergence free and vanishes with its gradient on the
// wall, and pressure pi = rho(t) sin(pi x / Lx) cos(pi y / Ly), which has zero mean.
// Forcings are analytic; nothing here uses the discrete operators.

#include <cmath>
#include <functional>
#include <numbers>

#include "lsqctrl/grid.hpp"
#include "lsqctrl/steady_nse.hpp"
#include "lsqctrl/stencil.hpp"
#include "lsqctrl/stokes_control.hpp"

namespace lsqctrl::oracles {

struct ManufacturedCase {
  double lx = 1, ly = 1;
  double amplitude = 1;
  std::function<double(double)> theta = [](double) { return 1.0; };
  std::function<double(double)> dtheta = [](double) { return 0.0; };
  std::function<double(double)> rho = [](double) { return 1.0; };

  /// psi = A cos(pi t / T) X Y, pi = A cos(pi t / T) (...): the standard unsteady case.
  static ManufacturedCase unsteady(double t_final, double lx = 1, double ly = 1, double amplitude = 1) {
    const double w = std::numbers::pi / t_final;
    ManufacturedCase c;
    c.lx = lx;
    c.ly = ly;
    c.amplitude = amplitude;
    c.theta = [w](double t) { return std::cos(w * t); };
    c.dtheta = [w](double t) { return -w * std::sin(w * t); };
    c.rho = [w](double t) { return std::cos(w * t); };
    return c;
  }

  /// Time-independent case.
  static ManufacturedCase steady(double lx = 1, double ly = 1, double amplitude = 1) {
    ManufacturedCase c;
    c.lx = lx;
    c.ly = ly;
    c.amplitude = amplitude;
    return c;
  }

  static ManufacturedCase zero(double lx = 1, double ly = 1) { return steady(lx, ly, 0.0); }

  // s = sin^2(a x) and its first three derivatives.
  struct Profile {
    double s, d1, d2, d3;
  };
  static Profile profile(double a, double x) {
    const double s = std::sin(a * x);
    return {s * s, a * std::sin(2 * a * x), 2 * a * a * std::cos(2 * a * x),
            -4 * a * a * a * std::sin(2 * a * x)};
  }
  double ax() const { return std::numbers::pi / lx; }
  double ay() const { return std::numbers::pi / ly; }

  double psi(double x, double y, double t) const {
    return amplitude * theta(t) * profile(ax(), x).s * profile(ay(), y).s;
  }
  double u(double x, double y, double t) const {
    return amplitude * theta(t) * profile(ax(), x).s * profile(ay(), y).d1;
  }
  double v(double x, double y, double t) const {
    return -amplitude * theta(t) * profile(ax(), x).d1 * profile(ay(), y).s;
  }
  double pressure(double x, double y, double t) const {
    return amplitude * rho(t) * std::sin(ax() * x) * std::cos(ay() * y);
  }

  /// y_t - nu Lap y + grad pi (+ (y . grad) y when `convective`).
  std::pair<double, double> forcing(double x, double y, double t, double nu, bool convective) const {
    const Profile px = profile(ax(), x), py = profile(ay(), y);
    const double a = amplitude, th = theta(t), dth = dtheta(t), r = rho(t);
    double fu = a * dth * px.s * py.d1 - nu * a * th * (px.d2 * py.d1 + px.s * py.d3) +
                a * r * ax() * std::cos(ax() * x) * std::cos(ay() * y);
    double fv = -a * dth * px.d1 * py.s + nu * a * th * (px.d3 * py.s + px.d1 * py.d2) -
                a * r * ay() * std::sin(ax() * x) * std::sin(ay() * y);
    if (convective) {
      const double a2 = a * a * th * th;
      fu += a2 * px.s * px.d1 * (py.d1 * py.d1 - py.s * py.d2);
      fv += a2 * py.s * py.d1 * (px.d1 * px.d1 - px.s * px.d2);
    }
    return {fu, fv};
  }

  /// Face velocity sampled at time t.
  VectorXd sample_velocity(const Grid2& g, double t) const {
    return stencil::sample_velocity(
        g, [&](double x, double y) { return u(x, y, t); }, [&](double x, double y) { return v(x, y, t); });
  }
  /// Exactly (discretely) divergence-free velocity from psi at the vertices.
  VectorXd curl_velocity(const Grid2& g, double t) const {
    return stencil::curl_of_stream(g, [&](double x, double y) { return psi(x, y, t); });
  }
  VectorXd sample_pressure(const Grid2& g, double t) const {
    VectorXd p = stencil::sample(g.layout(Stagger::cell), [&](double x, double y) { return pressure(x, y, t); });
    return p;
  }
  VectorXd sample_forcing(const Grid2& g, double t, double nu, bool convective) const {
    return stencil::sample_velocity(
        g, [&](double x, double y) { return forcing(x, y, t, nu, convective).first; },
        [&](double x, double y) { return forcing(x, y, t, nu, convective).second; });
  }
};

struct ManufacturedStokes {
  Triplet exact;     ///< y at nodes, pi at interval midpoints (zero mean), f = 0
  VectorXd forcing;  ///< analytic y_t - nu Lap y + grad pi at interval midpoints
};

/// Samples the case on the space-time grid. Used with omega = Omega, the forcing
/// can be fed either as data (direct mode) or compared against a control.
inline ManufacturedStokes manufactured_stokes(const ManufacturedCase& c, const SpaceTimeGrid& st, double nu) {
  const Grid2& g = st.space();
  const int n = g.n_vel(), nc = g.n_cell();
  ManufacturedStokes out{Triplet::zeros(st), VectorXd(st.interval_velocity_size())};
  for (int k = 0; k <= st.nt(); ++k) slice(out.exact.y, k, n) = c.sample_velocity(g, st.time_node(k));
  for (int k = 0; k < st.nt(); ++k) {
    const double t = st.interval_mid(k);
    VectorXd p = c.sample_pressure(g, t);
    stencil::remove_mean(p);
    slice(out.exact.pi, k, nc) = p;
    slice(out.forcing, k, n) = c.sample_forcing(g, t, nu, false);
  }
  return out;
}

/// Direct-mode problem whose exact solution is the manufactured case.
inline ControlProblem manufactured_direct_problem(const ManufacturedCase& c, const SpaceTimeGrid& st, double nu,
                                                  Metric metric = Metric::a0_exact) {
  ControlProblem p{st, nu, c.sample_velocity(st.space(), 0.0), SupportMask::whole(st.space()), Mode::direct, 0.0,
                   metric, manufactured_stokes(c, st, nu).forcing};
  return p;
}

struct ManufacturedSteady {
  SteadyState exact;  ///< sampled y and zero-mean pi
  VectorXd forcing;   ///< analytic -nu Lap y + div(y (x) y) + grad pi at the faces
};

/// Time-independent case (theta and rho taken at t = 0) for the steady Navier-Stokes problem.
inline ManufacturedSteady manufactured_steady(const ManufacturedCase& c, const Grid2& g, double nu) {
  ManufacturedSteady out{{c.sample_velocity(g, 0.0), c.sample_pressure(g, 0.0)}, c.sample_forcing(g, 0.0, nu, true)};
  stencil::remove_mean(out.exact.pi);
  return out;
}

inline SteadyProblem manufactured_steady_problem(const ManufacturedCase& c, const Grid2& g, double nu,
                                                 double epsilon = 0.0) {
  return SteadyProblem{g, nu, manufactured_steady(c, g, nu).forcing, epsilon};
}

}  // namespace lsqctrl::oracles
