#pragma once

// Alternating scheme for null control: at frozen pressure the heat-type problem
//   y_t - nu Lap y = f 1_omega - grad pi (+ data),  y(0) = y0,  y(T) = 0
// is solved by least squares in (y, f) (the corrector energy only), then the pressure
// takes one descent step on
//   G(pi) = 1/2 |div y_pi|^2_{L2(Q_T)},
// where y_pi solves the Crank-Nicolson heat equation forward from y0 with f held at
// the value of the inner step. G is quadratic in pi. Its gradient comes from the
// discrete adjoint of the forward scheme, a backward Crank-Nicolson solve, so it is
// exact up to roundoff.

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lsqctrl/descent.hpp"
#include "lsqctrl/error.hpp"
#include "lsqctrl/separable.hpp"
#include "lsqctrl/stencil.hpp"
#include "lsqctrl/stokes_control.hpp"

namespace lsqctrl {

/// Forward heat solve pi -> y_pi at fixed control, the divergence functional G and
/// its adjoint gradient.
class PressureFunctional {
 public:
  explicit PressureFunctional(const ControlProblem& p)
      : p_((p.validate(), p)), st_(p_.grid), modes_(ModalTransform::velocity(st_.space())),
        mask_(p_.mask.weights(st_)) {
    shift_ = 0.5 * st_.ht() * p_.nu;
  }

  const SpaceTimeGrid& grid() const { return st_; }

  /// Nodal velocity solving (y_{k+1} - y_k)/ht + nu A ybar_k = 1_omega f_k - G pi_k + g_k.
  /// `homogeneous` drops y0 and g (the linear part of the map).
  VectorXd forward(const VectorXd& pi, const VectorXd& f, bool homogeneous = false) const {
    check(pi, f);
    const Grid2& g = st_.space();
    const int n = g.n_vel(), nc = g.n_cell();
    const double ht = st_.ht();
    VectorXd y(st_.nodal_velocity_size());
    slice(y, 0, n) = homogeneous ? VectorXd::Zero(n) : p_.y0;
    for (int k = 0; k < st_.nt(); ++k) {
      const VectorXd prev = slice(y, k, n);
      VectorXd rhs = prev - shift_ * stencil::neg_laplacian(g, prev) +
                     ht * (mask_.segment(std::ptrdiff_t(k) * n, n).cwiseProduct(slice(f, k, n)) -
                           stencil::gradient(g, slice(pi, k, nc)));
      if (!homogeneous && p_.forcing.size() > 0) rhs += ht * slice(p_.forcing, k, n);
      slice(y, k + 1, n) = solve_shifted(rhs);
    }
    return y;
  }

  /// 1/2 |div y|^2 with the exact time quadrature for piecewise linear y.
  double divergence_energy(const VectorXd& y) const {
    const Grid2& g = st_.space();
    const int n = g.n_vel();
    double s = 0;
    for (int k = 0; k < st_.nt(); ++k) {
      const VectorXd a = slice(y, k, n), b = slice(y, k + 1, n);
      s += stencil::divergence(g, 0.5 * (a + b)).squaredNorm() + stencil::divergence(g, b - a).squaredNorm() / 12;
    }
    return 0.5 * st_.ht() * g.cell_area() * s;
  }

  double value(const VectorXd& pi, const VectorXd& f) const { return divergence_energy(forward(pi, f)); }

  struct Gradient {
    double value = 0;
    VectorXd pi;  ///< L2(Q_T) Riesz representative, zero mean per interval
  };

  /// G and its gradient: lambda solves the transposed recursion backward from T,
  ///   P lambda_{nt-1} = -r_nt,  P lambda_{k-1} = Q lambda_k - r_k,
  /// with P, Q = I +- (ht nu / 2) A and r_k = dG/dy_k; then dG/dpi_k = -ht D lambda_k.
  Gradient gradient(const VectorXd& pi, const VectorXd& f) const {
    const Grid2& g = st_.space();
    const int n = g.n_vel(), nc = g.n_cell(), nt = st_.nt();
    const double m = g.cell_area(), ht = st_.ht();
    const VectorXd y = forward(pi, f);

    VectorXd r = VectorXd::Zero(st_.nodal_velocity_size());
    const double cj = 1.0 / 12.0;
    for (int k = 0; k < nt; ++k) {
      const VectorXd a = slice(y, k, n), b = slice(y, k + 1, n);
      const VectorXd q = stencil::divergence(g, 0.5 * (a + b)), j = stencil::divergence(g, b - a);
      // D^T = -G
      slice(r, k, n) -= ht * m * stencil::gradient(g, 0.5 * q - cj * j);
      slice(r, k + 1, n) -= ht * m * stencil::gradient(g, 0.5 * q + cj * j);
    }

    Gradient out;
    out.value = divergence_energy(y);
    out.pi = VectorXd::Zero(st_.interval_cell_size());
    VectorXd lambda = solve_shifted(-slice(r, nt, n));
    for (int k = nt - 1;; --k) {
      VectorXd pk = -stencil::divergence(g, lambda) / m;
      stencil::remove_mean(pk);
      slice(out.pi, k, nc) = pk;
      if (k == 0) break;
      lambda = solve_shifted(lambda - shift_ * stencil::neg_laplacian(g, lambda) - slice(r, k, n));
    }
    return out;
  }

  /// L2(Q_T) inner product of two interval cell fields.
  double inner(const VectorXd& a, const VectorXd& b) const {
    return st_.ht() * st_.space().cell_area() * a.dot(b);
  }

 private:
  void check(const VectorXd& pi, const VectorXd& f) const {
    if (pi.size() != st_.interval_cell_size() || f.size() != st_.interval_velocity_size())
      throw InputError("PressureFunctional: pressure or control does not match the grid");
  }

  /// (I + ht nu / 2 A) x = rhs.
  VectorXd solve_shifted(const VectorXd& rhs) const {
    const int n = modes_.size();
    VectorXd hat(n), x(n);
    modes_.forward(rhs.data(), hat.data());
    hat = hat.cwiseQuotient((1.0 + shift_ * modes_.mu().array()).matrix());
    modes_.inverse(hat.data(), x.data());
    const double ref = rhs.norm();
    if (ref > 0) {
      const double res = (x + shift_ * stencil::neg_laplacian(st_.space(), x) - rhs).norm();
      if (!(res <= 1e-10 * ref))
        throw SolverError("heat solve: relative residual " + std::to_string(res / ref) + " exceeds 1e-10");
    }
    return x;
  }

  ControlProblem p_;
  SpaceTimeGrid st_;
  ModalTransform modes_;
  VectorXd mask_;
  double shift_ = 0;
};

struct SplitConfig {
  DescentConfig inner;     ///< descent in (y, f) at frozen pressure
  int max_outer = 20;
  double tol_g = 0.0;      ///< absolute: stop once G <= tol_g
  double tol_grad = 1e-8;  ///< relative: stop once |G'| <= tol_grad * |G'| at the first outer step
  int max_backtrack = 60;
  int corrector_refine = 2;

  SplitConfig() { inner.max_iter = 100; }

  void validate() const {
    inner.validate();
    detail::require(max_outer >= 0, "SplitConfig: max_outer must be >= 0");
    detail::require(tol_g >= 0 && tol_grad >= 0, "SplitConfig: tolerances must be >= 0");
    detail::require(max_backtrack >= 0, "SplitConfig: max_backtrack must be >= 0");
    detail::require(corrector_refine >= 1, "SplitConfig: corrector_refine must be >= 1");
  }
};

/// One outer iteration. `g_after` equals `g_before` when no step was taken.
struct SplitRecord {
  int outer = 0;
  int inner_iterations = 0;
  double inner_energy = 0;  ///< 1/2 |v|^2 after the inner descent
  double g_before = 0;
  double g_after = 0;
  double grad_norm = 0;     ///< |G'|_{L2(Q_T)}
  double step = 0;
  int backtracks = 0;
};

enum class SplitStop { g_tol, grad_tol, max_outer, backtrack_failed };

inline std::string_view to_string(SplitStop r) {
  switch (r) {
    case SplitStop::g_tol: return "g_tol";
    case SplitStop::grad_tol: return "grad_tol";
    case SplitStop::max_outer: return "max_outer";
    case SplitStop::backtrack_failed: return "backtrack_failed";
  }
  return "unknown";
}

struct SplitReport {
  std::vector<SplitRecord> outer;
  SplitStop reason = SplitStop::max_outer;
  bool converged = false;
  Triplet state;
};

/// Runs the alternating scheme from `start` (default s_A). `observer(state, record)`
/// is called after every outer iteration.
template <class Observer = std::nullptr_t>
SplitReport split_iteration(const ControlProblem& p, const SplitConfig& cfg,
                            std::optional<Triplet> start = std::nullopt, Observer&& observer = nullptr) {
  cfg.validate();
  detail::require(p.mode == Mode::null_control, "split iteration: requires null-control mode");
  StokesOptions heat_opt;
  heat_opt.include_divergence = false;
  heat_opt.freeze_pressure = true;
  heat_opt.corrector_refine = cfg.corrector_refine;
  const StokesLeastSquares heat(p, heat_opt);
  const PressureFunctional gfun(p);
  const StokesDescentProblem inner_problem(heat);

  SplitReport report;
  Triplet s = start ? *start : heat.lift_sA();
  detail::require(s.conforms(heat.grid()), "split iteration: start state does not match the grid");
  heat.project_admissible(s);
  double g0 = -1;

  for (int k = 0;; ++k) {
    auto inner = steepest_descent(inner_problem, s, cfg.inner);
    s = std::move(inner.final_u);

    SplitRecord rec;
    rec.outer = k;
    rec.inner_iterations = inner.iterates_count;
    rec.inner_energy = inner.energies.back();
    const auto gr = gfun.gradient(s.pi, s.f);
    rec.g_before = rec.g_after = gr.value;
    const double gn2 = gfun.inner(gr.pi, gr.pi);
    rec.grad_norm = std::sqrt(gn2);
    if (g0 < 0) g0 = rec.grad_norm;

    bool stop = true;
    if (gr.value <= cfg.tol_g) {
      report.reason = SplitStop::g_tol;
    } else if (gn2 <= 0 || rec.grad_norm <= cfg.tol_grad * g0) {
      report.reason = SplitStop::grad_tol;
    } else if (k >= cfg.max_outer) {
      report.reason = SplitStop::max_outer;
    } else {
      stop = false;
    }

    if (!stop) {
      // Exact line minimizer of the quadratic along -G', then halving until G does
      // not increase.
      const VectorXd dir = -gr.pi;
      const double curvature = 2 * gfun.divergence_energy(gfun.forward(dir, VectorXd::Zero(s.f.size()), true));
      double t = curvature > 0 ? gn2 / curvature : 1.0;
      bool accepted = false;
      for (int b = 0; b <= cfg.max_backtrack; ++b, t *= 0.5) {
        const VectorXd trial = s.pi + t * dir;
        const double gt = gfun.value(trial, s.f);
        if (gt <= gr.value) {
          s.pi = trial;
          rec.step = t;
          rec.g_after = gt;
          rec.backtracks = b;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        rec.backtracks = cfg.max_backtrack;
        report.reason = SplitStop::backtrack_failed;
        stop = true;
      }
    }

    report.outer.push_back(rec);
    if constexpr (!std::is_same_v<std::decay_t<Observer>, std::nullptr_t>) observer(s, rec);
    if (stop) {
      report.converged = report.reason == SplitStop::g_tol || report.reason == SplitStop::grad_tol;
      report.state = std::move(s);
      return report;
    }
    heat.project_admissible(s);
  }
}

}  // namespace lsqctrl
