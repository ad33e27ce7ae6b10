#pragma once

// Least-squares solver for the unsteady Stokes system
//   y_t - nu Lap y + grad pi = f 1_omega (+ data),  div y = 0,  y = 0 on the wall,
// posed on the space-time MAC grid. A state (y, pi, f) is measured by the corrector
// v solving -v_tt - Lap v + R = 0 (lateral Dirichlet, natural v_t = 0 at t = 0, T),
// with R the Stokes residual, and
//   E = 1/2 (|v_t|^2 + |grad v|^2 + |div y + eps pi|^2)   over Q_T.
//
// Time discretization: y is continuous and piecewise linear (nodes 0..nt); pi and f
// are constant on each interval; the residual on interval k is Crank-Nicolson,
//   R_k = (y_{k+1} - y_k)/ht + nu A_h (y_k + y_{k+1})/2 + G pi_k - 1_omega f_k - g_k,
// so E vanishes exactly on the discrete Stokes solution. The divergence term is
// integrated exactly in time for piecewise linear y:
//   int_k |div y + eps pi|^2 = ht (|D ybar_k + eps pi_k|^2 + |D (y_{k+1} - y_k)|^2 / 12),
// and the corrector lives on a time grid refined by StokesOptions::corrector_refine.
// Without either of these, velocities alternating in sign from node to node are
// nearly invisible to E and the descent stalls on them.

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <optional>

#include "lsqctrl/descent.hpp"
#include "lsqctrl/error.hpp"
#include "lsqctrl/grid.hpp"
#include "lsqctrl/quadrature.hpp"
#include "lsqctrl/separable.hpp"
#include "lsqctrl/stencil.hpp"

namespace lsqctrl {

enum class Mode { null_control, direct };

/// Velocity, pressure and control on the space-time grid.
/// y: nt+1 nodal velocity slices; pi: nt interval cell slices; f: nt interval
/// velocity slices.
struct Triplet {
  VectorXd y, pi, f;

  static Triplet zeros(const SpaceTimeGrid& st) {
    return {VectorXd::Zero(st.nodal_velocity_size()), VectorXd::Zero(st.interval_cell_size()),
            VectorXd::Zero(st.interval_velocity_size())};
  }

  Triplet& axpy(double a, const Triplet& d) {
    y += a * d.y;
    pi += a * d.pi;
    f += a * d.f;
    return *this;
  }
  Triplet operator+(const Triplet& o) const { return {y + o.y, pi + o.pi, f + o.f}; }
  Triplet operator-(const Triplet& o) const { return {y - o.y, pi - o.pi, f - o.f}; }
  Triplet operator*(double a) const { return {a * y, a * pi, a * f}; }
  bool conforms(const SpaceTimeGrid& st) const {
    return y.size() == st.nodal_velocity_size() && pi.size() == st.interval_cell_size() &&
           f.size() == st.interval_velocity_size();
  }
};

using StateTriplet = Triplet;
using Direction = Triplet;

struct CorrectorField {
  VectorXd v;                      ///< nodal velocity field, zero on the wall by construction
  double weak_residual_norm = 0;   ///< relative residual of the elliptic solve
};

struct ControlProblem {
  SpaceTimeGrid grid;
  double nu = 1.0;
  VectorXd y0;  ///< face velocity slice
  SupportMask mask;
  Mode mode = Mode::null_control;
  double epsilon = 0.0;
  Metric metric = Metric::a0_exact;
  VectorXd forcing;  ///< optional data term g on intervals (empty = 0)

  void validate() const {
    detail::require(nu > 0, "ControlProblem: nu must be positive");
    detail::require(epsilon >= 0, "ControlProblem: epsilon must be >= 0");
    detail::require(y0.size() == grid.space().n_vel(),
                    "ControlProblem: y0 must be a velocity slice on the spatial grid");
    detail::require(y0.allFinite(), "ControlProblem: y0 must be finite");
    detail::require(forcing.size() == 0 || forcing.size() == grid.interval_velocity_size(),
                    "ControlProblem: forcing must be an interval velocity field");
    detail::require(forcing.size() == 0 || forcing.allFinite(), "ControlProblem: forcing must be finite");
    mask.validate(grid.space(), grid.t_final());
  }
};

/// Samples a velocity given pointwise at the faces; the functions must vanish on
/// the wall (checked on a fine set of boundary points).
inline VectorXd sample_wall_velocity(const Grid2& g, const std::function<double(double, double)>& fu,
                                     const std::function<double(double, double)>& fv) {
  const int probes = 4 * std::max(g.nx(), g.ny()) + 1;
  double worst = 0, scale = 0;
  for (int s = 0; s < probes; ++s) {
    const double a = g.lx() * s / (probes - 1), b = g.ly() * s / (probes - 1);
    for (auto [x, y] : {std::pair{a, 0.0}, {a, g.ly()}, {0.0, b}, {g.lx(), b}})
      worst = std::max({worst, std::abs(fu(x, y)), std::abs(fv(x, y))});
  }
  const VectorXd out = stencil::sample_velocity(g, fu, fv);
  scale = out.cwiseAbs().maxCoeff();
  if (worst > 1e-12 * std::max(1.0, scale))
    throw InputError("initial velocity does not vanish on the boundary (max |y| = " +
                     std::to_string(worst) + ")");
  return out;
}

struct StokesDiagnostics {
  double div_norm = 0;            ///< |div y|_{L2(Q_T)}
  double initial_trace_error = 0; ///< |y(.,0) - y0|
  double final_trace_norm = 0;    ///< |y(.,T)|
  double residual_norm = 0;       ///< weak Stokes residual, |v|_{H^1(Q_T)}
  double control_norm = 0;        ///< |f 1_omega|_{L2(Q_T)}
  double max_pressure_mean = 0;   ///< max over intervals of |mean pi_k|
};

struct StokesOptions {
  bool include_divergence = true;  ///< false: drop the |div y + eps pi|^2 term
  bool freeze_pressure = false;    ///< true: pressure direction is always zero
  int corrector_refine = 2;        ///< corrector time steps per state time step
};

/// T d: the corrector of d and the two pieces of div Y + eps Pi.
struct TImage {
  CorrectorField corrector;
  VectorXd div;   ///< D Ybar_k + eps Pi_k
  VectorXd jump;  ///< D (Y_{k+1} - Y_k) / sqrt(12)
};

class StokesLeastSquares {
 public:
  explicit StokesLeastSquares(ControlProblem p, StokesOptions opt = {})
      : p_((p.validate(), std::move(p))), opt_(opt), st_(p_.grid), solver_(st_, opt_.corrector_refine),
        metric_(st_, p_.metric, 1, p_.mode == Mode::null_control ? st_.nt() - 1 : st_.nt()),
        mask_(p_.mask.weights(st_)) {}

  const ControlProblem& problem() const { return p_; }
  const SpaceTimeGrid& grid() const { return st_; }
  const StokesOptions& options() const { return opt_; }
  const VectorXd& mask_weights() const { return mask_; }
  const A0VelocityMetric& velocity_metric() const { return metric_; }
  const SpaceTimeSolver& corrector_solver() const { return solver_; }
  bool control_active() const { return p_.mode == Mode::null_control; }

  /// s_A = (eta(t) y0, 0, 0), eta = 1 - t/T (null control) or 1 (direct).
  Triplet lift_sA() const {
    Triplet s = Triplet::zeros(st_);
    const int n = st_.space().n_vel();
    for (int k = 0; k <= st_.nt(); ++k) {
      const double eta = p_.mode == Mode::null_control ? 1.0 - double(k) / st_.nt() : 1.0;
      slice(s.y, k, n) = eta * p_.y0;
    }
    return s;
  }

  /// Interval residuals R_k; `affine` includes the data term.
  VectorXd residual(const Triplet& s, bool affine = true) const {
    check(s);
    const Grid2& g = st_.space();
    const int n = g.n_vel(), nc = g.n_cell();
    const double ht = st_.ht();
    VectorXd r(st_.interval_velocity_size());
    for (int k = 0; k < st_.nt(); ++k) {
      const VectorXd mid = 0.5 * (slice(s.y, k, n) + slice(s.y, k + 1, n));
      slice(r, k, n) = (slice(s.y, k + 1, n) - slice(s.y, k, n)) / ht +
                       p_.nu * stencil::neg_laplacian(g, mid) +
                       stencil::gradient(g, slice(s.pi, k, nc)) -
                       mask_.segment(std::ptrdiff_t(k) * n, n).cwiseProduct(slice(s.f, k, n));
    }
    if (affine && p_.forcing.size() > 0) r -= p_.forcing;
    return r;
  }

  /// q_k = D ybar_k + eps pi_k on intervals (zero when the term is dropped).
  VectorXd divergence_term(const Triplet& s) const {
    check(s);
    const Grid2& g = st_.space();
    const int n = g.n_vel(), nc = g.n_cell();
    VectorXd q = VectorXd::Zero(st_.interval_cell_size());
    if (!opt_.include_divergence) return q;
    for (int k = 0; k < st_.nt(); ++k) {
      const VectorXd mid = 0.5 * (slice(s.y, k, n) + slice(s.y, k + 1, n));
      slice(q, k, nc) = stencil::divergence(g, mid) + p_.epsilon * slice(s.pi, k, nc);
    }
    return q;
  }

  /// j_k = D (y_{k+1} - y_k) / sqrt(12) (zero when the term is dropped).
  VectorXd divergence_jump(const Triplet& s) const {
    check(s);
    const Grid2& g = st_.space();
    const int n = g.n_vel(), nc = g.n_cell();
    VectorXd j = VectorXd::Zero(st_.interval_cell_size());
    if (!opt_.include_divergence) return j;
    const double c = 1.0 / std::sqrt(12.0);
    for (int k = 0; k < st_.nt(); ++k)
      slice(j, k, nc) = c * stencil::divergence(g, slice(s.y, k + 1, n) - slice(s.y, k, n));
    return j;
  }

  /// Corrector on the refined time grid.
  CorrectorField corrector(const Triplet& s, bool affine = true) const {
    const VectorXd load = solver_.interval_load(residual(s, affine));
    CorrectorField c;
    c.v = solver_.solve_load(-load);
    const double ref = load.norm();
    c.weak_residual_norm = ref > 0 ? (solver_.apply(c.v) + load).norm() / ref : 0.0;
    return c;
  }

  /// |v_t|^2 + |grad v|^2 by explicit quadrature on the corrector grid.
  double corrector_norm_sq(const VectorXd& v) const {
    const SpaceTimeGrid& fine = solver_.corrector_grid();
    const Grid2& g = st_.space();
    const int n = g.n_vel();
    const double m = g.cell_area(), ht = fine.ht();
    double s = 0;
    for (int k = 0; k < fine.nt(); ++k) {
      const VectorXd dv = (slice(v, k + 1, n) - slice(v, k, n)) / ht;
      const VectorXd mid = 0.5 * (slice(v, k, n) + slice(v, k + 1, n));
      s += ht * (m * dv.squaredNorm() + stencil::stiffness(g, mid));
    }
    return s;
  }

  double energy(const Triplet& s) const { return energy_of(s, corrector(s).v); }

  /// |div y + eps pi|^2_{L2(Q_T)}.
  double divergence_sq(const Triplet& s) const {
    const int nc = st_.space().n_cell();
    return quadrature_interval_sq(st_, divergence_term(s), nc) + quadrature_interval_sq(st_, divergence_jump(s), nc);
  }

  /// Energy given a precomputed corrector of s.
  double energy_of(const Triplet& s, const VectorXd& v) const {
    return 0.5 * (corrector_norm_sq(v) + divergence_sq(s));
  }

  /// <E'(s), d> = -sum_k ht m <R_k(d), vbar_k> + sum_k ht m (<q_k(s), q_k(d)> + <j_k(s), j_k(d)>),
  /// vbar_k the time average of v over interval k.
  double first_variation(const Triplet& s, const Direction& d) const {
    return first_variation_with(s, corrector(s).v, d);
  }

  double first_variation_with(const Triplet& s, const VectorXd& v, const Direction& d) const {
    const VectorXd load = solver_.interval_load(residual(d, false));
    const double m = st_.space().cell_area(), ht = st_.ht();
    return -v.dot(load) + ht * m * (divergence_term(s).dot(divergence_term(d)) +
                                    divergence_jump(s).dot(divergence_jump(d)));
  }

  /// A0-Riesz representative of E'(s).
  Direction gradient_a0(const Triplet& s) const { return gradient_with(s, corrector(s).v); }

  Direction gradient_with(const Triplet& s, const VectorXd& v) const {
    const Grid2& g = st_.space();
    const int n = g.n_vel(), nc = g.n_cell(), nt = st_.nt();
    const double m = g.cell_area(), ht = st_.ht();
    const VectorXd q = divergence_term(s), jump = divergence_jump(s);
    const VectorXd vavg = solver_.interval_average(v);
    const double cj = ht * m / std::sqrt(12.0);
    Direction out = Triplet::zeros(st_);
    VectorXd dual = VectorXd::Zero(st_.nodal_velocity_size());
    for (int k = 0; k < nt; ++k) {
      const VectorXd vbar = slice(vavg, k, n);
      const VectorXd a = m * vbar;
      const VectorXd b = (0.5 * ht * m) * (-p_.nu * stencil::neg_laplacian(g, vbar) -
                                           stencil::gradient(g, slice(q, k, nc)));
      const VectorXd c = cj * stencil::gradient(g, slice(jump, k, nc));
      slice(dual, k, n) += a + b + c;
      slice(dual, k + 1, n) += -a + b - c;
      if (!opt_.freeze_pressure) {
        VectorXd pk = stencil::divergence(g, vbar);
        if (opt_.include_divergence) pk += p_.epsilon * slice(q, k, nc);
        stencil::remove_mean(pk);
        slice(out.pi, k, nc) = pk;
      }
      if (control_active())
        slice(out.f, k, n) = mask_.segment(std::ptrdiff_t(k) * n, n).cwiseProduct(vbar);
    }
    out.y = metric_.solve(dual);
    return out;
  }

  /// T d = (corrector of d, div Y + eps Pi).
  TImage apply_T(const Direction& d) const { return {corrector(d, false), divergence_term(d), divergence_jump(d)}; }

  /// |T d|_Y^2.
  double image_norm_sq(const Direction& d) const { return corrector_norm_sq(corrector(d, false).v) + divergence_sq(d); }

  double inner_a0(const Direction& a, const Direction& b) const {
    check(a);
    check(b);
    const double w = st_.space().cell_area() * st_.ht();
    return metric_.inner(a.y, b.y) + w * (a.pi.dot(b.pi) + a.f.dot(b.f));
  }
  double norm_a0_sq(const Direction& d) const { return inner_a0(d, d); }

  /// `with_residual` = false skips the corrector solve (residual_norm left at 0).
  StokesDiagnostics diagnostics(const Triplet& s, bool with_residual = true) const {
    check(s);
    const Grid2& g = st_.space();
    const int n = g.n_vel(), nc = g.n_cell();
    const double m = g.cell_area();
    StokesDiagnostics d;
    double div2 = 0;
    for (int k = 0; k < st_.nt(); ++k) {
      const VectorXd mid = 0.5 * (slice(s.y, k, n) + slice(s.y, k + 1, n));
      const VectorXd jump = slice(s.y, k + 1, n) - slice(s.y, k, n);
      div2 += st_.ht() * m *
              (stencil::divergence(g, mid).squaredNorm() + stencil::divergence(g, jump).squaredNorm() / 12);
      d.max_pressure_mean = std::max(d.max_pressure_mean, std::abs(slice(s.pi, k, nc).mean()));
    }
    d.div_norm = std::sqrt(div2);
    d.initial_trace_error = std::sqrt(m * (slice(s.y, 0, n) - p_.y0).squaredNorm());
    d.final_trace_norm = trace_norms(st_, s.y).second;
    if (with_residual) d.residual_norm = std::sqrt(corrector_norm_sq(corrector(s).v));
    d.control_norm = std::sqrt(quadrature_interval_sq(st_, mask_.cwiseProduct(s.f), n));
    return d;
  }

  /// Zero-mean pressure per interval and control restricted to the mask.
  void project_admissible(Triplet& s) const {
    check(s);
    const int nc = st_.space().n_cell();
    for (int k = 0; k < st_.nt(); ++k) stencil::remove_mean(slice(s.pi, k, nc));
    s.f = s.f.cwiseProduct(mask_);
    if (!control_active()) s.f.setZero();
  }

 private:
  void check(const Triplet& s) const {
    if (!s.conforms(st_)) throw InputError("Stokes: triplet does not match the space-time grid");
  }

  ControlProblem p_;
  StokesOptions opt_;
  SpaceTimeGrid st_;
  SpaceTimeSolver solver_;
  A0VelocityMetric metric_;
  VectorXd mask_;
};

/// Adapter for the generic descent engine; points are full states s = s_A + u.
class StokesDescentProblem {
 public:
  using Point = Triplet;

  explicit StokesDescentProblem(const StokesLeastSquares& ls) : ls_(ls) {}

  Evaluation<Triplet> evaluate(const Triplet& s) const {
    const VectorXd v = ls_.corrector(s).v;
    return {ls_.energy_of(s, v), ls_.gradient_with(s, v)};
  }
  double metric_norm_sq(const Direction& d) const { return ls_.norm_a0_sq(d); }
  double image_norm_sq(const Direction& d) const { return ls_.image_norm_sq(d); }
  void axpy(Triplet& s, double eta, const Direction& d) const {
    s.axpy(eta, d);
    ls_.project_admissible(s);
  }

 private:
  const StokesLeastSquares& ls_;
};

struct StokesRun {
  Triplet state;
  DescentReport<Triplet> report;
};

/// Minimizing sequence from s_A (u_0 = 0). `observer(state, record)` sees every iterate.
template <class Observer = std::nullptr_t>
StokesRun descend(const StokesLeastSquares& ls, const DescentConfig& cfg, Observer&& observer = nullptr) {
  StokesDescentProblem prob(ls);
  auto report = steepest_descent(prob, ls.lift_sA(), cfg, std::forward<Observer>(observer));
  Triplet final_state = report.final_u;
  return {std::move(final_state), std::move(report)};
}

}  // namespace lsqctrl
