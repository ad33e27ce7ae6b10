#pragma once

// Least-squares solver for the steady Navier-Stokes system
//   -nu Lap y + div(y (x) y) + grad pi = f,  div y = 0,  y = 0 on the wall,
// on one MAC slice. A state (y, pi) is measured by the corrector v,
//   A v + R(y, pi) = 0,  R = nu A y + div(y (x) y) + G pi - f,
// and E = 1/2 (|grad v|^2 + |div y + eps pi|^2). E is quartic in y, so the descent
// uses an Armijo line search started from the Gauss-Newton step.

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "lsqctrl/error.hpp"
#include "lsqctrl/grid.hpp"
#include "lsqctrl/separable.hpp"
#include "lsqctrl/stencil.hpp"

namespace lsqctrl {

struct SteadyProblem {
  Grid2 grid;
  double nu = 1.0;
  VectorXd f;  ///< face velocity slice
  double epsilon = 0.0;

  void validate() const {
    detail::require(nu > 0, "SteadyProblem: nu must be positive");
    detail::require(epsilon >= 0, "SteadyProblem: epsilon must be >= 0");
    detail::require(f.size() == grid.n_vel(), "SteadyProblem: f must be a velocity slice");
    detail::require(f.allFinite(), "SteadyProblem: f must be finite");
  }
};

struct SteadyState {
  VectorXd y, pi;

  static SteadyState zeros(const Grid2& g) { return {VectorXd::Zero(g.n_vel()), VectorXd::Zero(g.n_cell())}; }
  SteadyState operator+(const SteadyState& o) const { return {y + o.y, pi + o.pi}; }
  SteadyState operator-(const SteadyState& o) const { return {y - o.y, pi - o.pi}; }
  SteadyState operator*(double a) const { return {a * y, a * pi}; }
  bool conforms(const Grid2& g) const { return y.size() == g.n_vel() && pi.size() == g.n_cell(); }
};

struct SteadyCorrector {
  VectorXd v;
  double weak_residual_norm = 0;  ///< relative residual of the Poisson solve
  /// |grad v| / (|y (x) y| + nu |grad y| + |pi| + |f|_{H^-1}); the weak form bounds it by sqrt(2).
  double bound_ratio = 0;
};

class SteadyLeastSquares {
 public:
  explicit SteadyLeastSquares(SteadyProblem p)
      : p_((p.validate(), std::move(p))), poisson_(p_.grid, PoissonSolver::Kind::velocity),
        f_dual_norm_(dual_norm(p_.f)) {}

  const SteadyProblem& problem() const { return p_; }
  const Grid2& grid() const { return p_.grid; }

  /// R = nu A y + div(y (x) y) + G pi - f (`affine` = false drops f).
  VectorXd residual(const SteadyState& s, bool affine = true) const {
    check(s);
    const Grid2& g = p_.grid;
    VectorXd r = p_.nu * stencil::neg_laplacian(g, s.y) + stencil::convection(g, s.y, s.y) +
                 stencil::gradient(g, s.pi);
    if (affine) r -= p_.f;
    return r;
  }

  /// Linearization of R at s applied to d.
  VectorXd residual_derivative(const SteadyState& s, const SteadyState& d) const {
    check(s);
    check(d);
    const Grid2& g = p_.grid;
    return p_.nu * stencil::neg_laplacian(g, d.y) + stencil::convection(g, s.y, d.y) +
           stencil::convection(g, d.y, s.y) + stencil::gradient(g, d.pi);
  }

  VectorXd divergence_term(const SteadyState& s) const {
    check(s);
    return stencil::divergence(p_.grid, s.y) + p_.epsilon * s.pi;
  }

  SteadyCorrector corrector(const SteadyState& s) const {
    const VectorXd r = residual(s);
    SteadyCorrector c;
    c.v = poisson_.solve(-r);
    const double ref = r.norm();
    c.weak_residual_norm = ref > 0 ? (poisson_.apply(c.v) + r).norm() / ref : 0.0;
    const Grid2& g = p_.grid;
    const stencil::FaceAverages a = stencil::face_averages(g, s.y);
    const double m = g.cell_area();
    const double yy = std::sqrt(m * (a.u_cell.cwiseAbs2().squaredNorm() + a.v_cell.cwiseAbs2().squaredNorm() +
                                     2 * a.u_vertex.cwiseProduct(a.v_vertex).squaredNorm()));
    const double bound = yy + p_.nu * std::sqrt(stencil::stiffness(g, s.y)) + std::sqrt(m) * s.pi.norm() + f_dual_norm_;
    c.bound_ratio = bound > 0 ? std::sqrt(stencil::stiffness(g, c.v)) / bound : 0.0;
    return c;
  }

  double energy_of(const SteadyState& s, const VectorXd& v) const {
    return 0.5 * (stencil::stiffness(p_.grid, v) + p_.grid.cell_area() * divergence_term(s).squaredNorm());
  }
  double energy(const SteadyState& s) const { return energy_of(s, corrector(s).v); }

  /// <E'(s), d> = -m <v, R'(s) d> + m <q(s), D Y + eps Pi>, written out directly.
  double first_variation(const SteadyState& s, const SteadyState& d) const {
    const VectorXd v = corrector(s).v;
    const double m = p_.grid.cell_area();
    return -m * v.dot(residual_derivative(s, d)) +
           m * divergence_term(s).dot(stencil::divergence(p_.grid, d.y) + p_.epsilon * d.pi);
  }

  /// Riesz representative in H^1_0 x L^2_0:
  ///   pi-part  D v + eps q (mean removed),
  ///   y-part   -nu v - A^{-1} (C'(y)^T v + G q).
  SteadyState gradient_with(const SteadyState& s, const VectorXd& v) const {
    const Grid2& g = p_.grid;
    const VectorXd q = divergence_term(s);
    SteadyState out;
    out.pi = stencil::divergence(g, v) + p_.epsilon * q;
    stencil::remove_mean(out.pi);
    out.y = -p_.nu * v - poisson_.solve(stencil::convection_adjoint(g, s.y, v) + stencil::gradient(g, q));
    return out;
  }
  SteadyState gradient(const SteadyState& s) const { return gradient_with(s, corrector(s).v); }

  /// (Y, Pi) . (Y', Pi') = m (<A Y, Y'> + <Pi, Pi'>).
  double inner(const SteadyState& a, const SteadyState& b) const {
    check(a);
    check(b);
    const Grid2& g = p_.grid;
    return g.cell_area() * (stencil::neg_laplacian(g, a.y).dot(b.y) + a.pi.dot(b.pi));
  }
  double norm_sq(const SteadyState& d) const { return inner(d, d); }

  /// |grad dv|^2 + |D Y + eps Pi|^2 for the linearized image of d at s.
  double linearized_image_sq(const SteadyState& s, const SteadyState& d) const {
    const VectorXd dv = poisson_.solve(-residual_derivative(s, d));
    return stencil::stiffness(p_.grid, dv) +
           p_.grid.cell_area() * (stencil::divergence(p_.grid, d.y) + p_.epsilon * d.pi).squaredNorm();
  }

  /// Discrete NSE residual |R|_{L2} (the momentum equation only).
  double nse_residual_norm(const SteadyState& s) const {
    return std::sqrt(p_.grid.cell_area()) * residual(s).norm();
  }
  double div_norm(const SteadyState& s) const {
    check(s);
    return std::sqrt(p_.grid.cell_area()) * stencil::divergence(p_.grid, s.y).norm();
  }

  /// Pi_s = -(div y + y . v), a diagnostic cell field.
  VectorXd pi_s(const SteadyState& s, const VectorXd& v) const {
    const Grid2& g = p_.grid;
    const stencil::FaceAverages a = stencil::face_averages(g, s.y), b = stencil::face_averages(g, v);
    return -(stencil::divergence(g, s.y) + a.u_cell.cwiseProduct(b.u_cell) + a.v_cell.cwiseProduct(b.v_cell));
  }

  /// nu^-2 |f|_{H^-1}, with the discrete dual norm sqrt(m <A^-1 f, f>).
  double small_data_indicator() const { return f_dual_norm_ / (p_.nu * p_.nu); }

  void project_admissible(SteadyState& s) const {
    check(s);
    stencil::remove_mean(s.pi);
  }

 private:
  void check(const SteadyState& s) const {
    if (!s.conforms(p_.grid)) throw InputError("steady: state does not match the grid");
  }
  double dual_norm(const VectorXd& f) const {
    return std::sqrt(std::max(0.0, p_.grid.cell_area() * f.dot(poisson_.solve(f))));
  }

  SteadyProblem p_;
  PoissonSolver poisson_;
  double f_dual_norm_ = 0;
};

struct SteadyConfig {
  int max_iter = 2000;
  double tol_energy = 0.0;  ///< absolute
  double tol_grad = 0.0;    ///< relative to the first gradient norm
  double armijo_c = 1e-4;
  double min_step = 1e-14;  ///< line-search stagnation threshold
  double small_data_threshold = 1.0;
  bool record_trace = true;

  void validate() const {
    detail::require(max_iter >= 0, "SteadyConfig: max_iter must be >= 0");
    detail::require(tol_energy >= 0 && tol_grad >= 0, "SteadyConfig: tolerances must be >= 0");
    detail::require(armijo_c > 0 && armijo_c < 1, "SteadyConfig: armijo_c must lie in (0, 1)");
    detail::require(min_step > 0, "SteadyConfig: min_step must be > 0");
    detail::require(small_data_threshold > 0, "SteadyConfig: small_data_threshold must be > 0");
  }
};

struct SteadyRecord {
  int iter = 0;
  double energy = 0;
  double grad_norm = 0;
  double step = 0;
  double residual_norm = 0;  ///< |R|_{L2}
  double div_norm = 0;
  int backtracks = 0;
};

enum class SteadyStop { energy_tol, grad_tol, max_iter, stagnation };

inline std::string_view to_string(SteadyStop r) {
  switch (r) {
    case SteadyStop::energy_tol: return "energy_tol";
    case SteadyStop::grad_tol: return "grad_tol";
    case SteadyStop::max_iter: return "max_iter";
    case SteadyStop::stagnation: return "stagnation";
  }
  return "unknown";
}

struct SteadyReport {
  std::vector<SteadyRecord> trace;
  std::vector<double> energies;
  int iterates_count = 0;
  bool converged = false;
  SteadyStop reason = SteadyStop::max_iter;
  double small_data_indicator = 0;
  bool small_data_warning = false;
  double nse_residual_norm = 0;
  SteadyState state;
};

/// Steepest descent in H^1_0 x L^2_0 with Armijo backtracking (halving) from the
/// Gauss-Newton step |g|^2 / |J g|^2. `observer(state, record)` sees every iterate.
template <class Observer = std::nullptr_t>
SteadyReport descend_steady(const SteadyLeastSquares& ls, const SteadyConfig& cfg,
                            SteadyState s, Observer&& observer = nullptr) {
  cfg.validate();
  SteadyReport report;
  report.small_data_indicator = ls.small_data_indicator();
  report.small_data_warning = report.small_data_indicator > cfg.small_data_threshold;
  ls.project_admissible(s);

  SteadyCorrector c = ls.corrector(s);
  double e = ls.energy_of(s, c.v);
  double g0 = -1;
  for (int k = 0;; ++k) {
    const SteadyState g = ls.gradient_with(s, c.v);
    const double gn2 = ls.norm_sq(g);
    const double gn = std::sqrt(std::max(gn2, 0.0));
    if (g0 < 0) g0 = gn;

    SteadyRecord rec{k, e, gn, 0.0, ls.nse_residual_norm(s), ls.div_norm(s), 0};
    bool stop = true;
    SteadyState next;
    SteadyCorrector next_c;
    double next_e = e;
    if (e <= cfg.tol_energy) {
      report.reason = SteadyStop::energy_tol;
    } else if (gn2 <= 0 || gn <= cfg.tol_grad * g0) {
      report.reason = SteadyStop::grad_tol;
    } else if (k >= cfg.max_iter) {
      report.reason = SteadyStop::max_iter;
    } else {
      const double jg2 = ls.linearized_image_sq(s, g);
      double eta = jg2 > 0 ? gn2 / jg2 : 1.0;
      report.reason = SteadyStop::stagnation;
      for (int b = 0; eta >= cfg.min_step; ++b, eta *= 0.5) {
        next = s - g * eta;
        ls.project_admissible(next);
        next_c = ls.corrector(next);
        next_e = ls.energy_of(next, next_c.v);
        if (next_e <= e - cfg.armijo_c * eta * gn2 && next_e < e) {
          rec.step = eta;
          rec.backtracks = b;
          stop = false;
          break;
        }
      }
    }

    report.energies.push_back(e);
    if (cfg.record_trace) report.trace.push_back(rec);
    if constexpr (!std::is_same_v<std::decay_t<Observer>, std::nullptr_t>) observer(s, rec);
    if (stop) {
      report.iterates_count = k;
      report.converged = report.reason == SteadyStop::energy_tol || report.reason == SteadyStop::grad_tol;
      report.nse_residual_norm = rec.residual_norm;
      report.state = std::move(s);
      return report;
    }
    s = std::move(next);
    c = std::move(next_c);
    e = next_e;
  }
}

inline SteadyReport descend_steady(const SteadyLeastSquares& ls, const SteadyConfig& cfg) {
  return descend_steady(ls, cfg, SteadyState::zeros(ls.grid()));
}

}  // namespace lsqctrl
