#pragma once

// Direct solvers for the separable operators of the scheme, by fast
// diagonalization: every component grid is a tensor product of 1-D second
// difference matrices, so A_h = Qx (Lx/hx^2 + Ly/hy^2) Qy^T per component and
// space-time problems reduce to one tridiagonal system per spatial mode.
//
// Each solve checks its residual against the operator applied by the stencils
// and throws SolverError above 1e-10 relative.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <vector>

#include "lsqctrl/grid.hpp"
#include "lsqctrl/parallel.hpp"
#include "lsqctrl/stencil.hpp"
#include "lsqctrl/tridiagonal.hpp"

namespace lsqctrl {

using Eigen::MatrixXd;

/// Eigenpairs of the 1-D matrix tridiag(-1, 2, -1) (node kind) or the same with
/// end diagonals 3 (shifted kind, odd reflection).
struct AxisBasis {
  MatrixXd q;       ///< orthonormal eigenvectors (columns)
  VectorXd lambda;  ///< eigenvalues, dimensionless

  AxisBasis(AxisKind kind, int n) {
    MatrixXd a = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      a(i, i) = 2;
      if (i > 0) a(i, i - 1) = a(i - 1, i) = -1;
    }
    if (kind == AxisKind::shifted) {
      a(0, 0) += 1;
      a(n - 1, n - 1) += 1;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    q = es.eigenvectors();
    lambda = es.eigenvalues();
  }
};

/// Fast-diagonalization transform for a stack of component grids (one for a
/// vertex scalar, two for a face velocity).
class ModalTransform {
 public:
  explicit ModalTransform(std::vector<Layout> parts) : parts_(std::move(parts)) {
    for (const Layout& l : parts_) {
      ax_.emplace_back(l.kind_x, l.rows);
      ay_.emplace_back(l.kind_y, l.cols);
      size_ += l.size();
    }
    mu_.resize(size_);
    int off = 0;
    for (std::size_t c = 0; c < parts_.size(); ++c) {
      const Layout& l = parts_[c];
      for (int j = 0; j < l.cols; ++j)
        for (int i = 0; i < l.rows; ++i)
          mu_(off + l.index(i, j)) =
              ax_[c].lambda(i) / (l.hx * l.hx) + ay_[c].lambda(j) / (l.hy * l.hy);
      off += l.size();
    }
  }

  static ModalTransform velocity(const Grid2& g) {
    return ModalTransform({g.layout(Stagger::face_x), g.layout(Stagger::face_y)});
  }
  static ModalTransform vertex(const Grid2& g) {
    return ModalTransform({g.layout(Stagger::vertex)});
  }

  int size() const { return size_; }
  /// Eigenvalues of A_h = -Laplacian, one per mode.
  const VectorXd& mu() const { return mu_; }

  void forward(const double* in, double* out) const { apply(in, out, true); }
  void inverse(const double* in, double* out) const { apply(in, out, false); }

 private:
  void apply(const double* in, double* out, bool fwd) const {
    int off = 0;
    for (std::size_t c = 0; c < parts_.size(); ++c) {
      const Layout& l = parts_[c];
      Eigen::Map<const MatrixXd> src(in + off, l.rows, l.cols);
      Eigen::Map<MatrixXd> dst(out + off, l.rows, l.cols);
      if (fwd)
        dst.noalias() = ax_[c].q.transpose() * src * ay_[c].q;
      else
        dst.noalias() = ax_[c].q * src * ay_[c].q.transpose();
      off += l.size();
    }
  }

  std::vector<Layout> parts_;
  std::vector<AxisBasis> ax_, ay_;
  VectorXd mu_;
  int size_ = 0;
};

namespace detail_sep {

inline void check_residual(double res, double ref, const char* what) {
  if (res == 0) return;
  if (!(res <= 1e-10 * ref)) {
    throw SolverError(std::string(what) + ": relative residual " + std::to_string(res / ref) +
                      " exceeds 1e-10");
  }
}

}  // namespace detail_sep

/// -Laplacian g = rhs with homogeneous Dirichlet data, for face velocities or
/// vertex scalars.
class PoissonSolver {
 public:
  enum class Kind { velocity, vertex };

  PoissonSolver(const Grid2& g, Kind kind)
      : g_(g), kind_(kind),
        modes_(kind == Kind::velocity ? ModalTransform::velocity(g) : ModalTransform::vertex(g)) {}

  int size() const { return modes_.size(); }
  const ModalTransform& modes() const { return modes_; }

  VectorXd apply(const VectorXd& x) const {
    return kind_ == Kind::velocity ? stencil::neg_laplacian(g_, x)
                                   : VectorXd(-stencil::vertex_laplacian(g_, x));
  }

  /// Solve without the residual check (used inside other checked solves).
  VectorXd solve_unchecked(const VectorXd& rhs) const {
    detail::require(rhs.size() == size(), "PoissonSolver: rhs size mismatch");
    VectorXd tmp(size()), out(size());
    modes_.forward(rhs.data(), tmp.data());
    tmp.array() /= modes_.mu().array();
    modes_.inverse(tmp.data(), out.data());
    return out;
  }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd out = solve_unchecked(rhs);
    detail_sep::check_residual((apply(out) - rhs).norm(), rhs.norm(), "poisson_solve");
    return out;
  }

 private:
  Grid2 g_;
  Kind kind_;
  ModalTransform modes_;
};

/// Modal transform of every slice of a flattened space-time field.
inline void transform_slices(const ModalTransform& t, const VectorXd& in, VectorXd& out,
                             int slices, bool forward) {
  const int n = t.size();
  out.resize(in.size());
  parallel_for(slices, [&](int k) {
    const double* src = in.data() + static_cast<std::ptrdiff_t>(k) * n;
    double* dst = out.data() + static_cast<std::ptrdiff_t>(k) * n;
    forward ? t.forward(src, dst) : t.inverse(src, dst);
  });
}

/// Per-mode tridiagonal systems in time: for every spatial mode i solve
/// (diag_k(mu_i), off_k(mu_i)) x = b over the time nodes [first, last].
template <class DiagFn, class OffFn>
void solve_modal_time(const ModalTransform& t, VectorXd& modal, int first, int last,
                      DiagFn&& diag_of, OffFn&& off_of) {
  const int n = t.size();
  const int len = last - first + 1;
  if (len <= 0) return;
  parallel_for(n, [&](int i) {
    const double mu = t.mu()(i);
    std::vector<double> d(len), o(std::max(len - 1, 0)), b(len), work;
    for (int k = 0; k < len; ++k) {
      d[k] = diag_of(first + k, mu);
      b[k] = modal(static_cast<std::ptrdiff_t>(first + k) * n + i);
      if (k + 1 < len) o[k] = off_of(first + k, mu);
    }
    solve_spd_tridiagonal(d, o, b, work);
    for (int k = 0; k < len; ++k) modal(static_cast<std::ptrdiff_t>(first + k) * n + i) = b[k];
  });
}

/// Space-time corrector operator on velocity fields at the nodes of the corrector
/// time grid (the state grid with each interval split into `refine` pieces):
///   K = m * Kt (x) I + Bt (x) m A_h,
/// the discrete form of  int (v_t . w_t + grad v : grad w)  with v_t piecewise
/// constant and grad v taken at interval midpoints. No rows are dropped at t=0
/// or t=T: the temporal Neumann condition is natural.
///
/// With refine = 1 a residual that alternates in sign from one interval to the
/// next integrates to zero against every hat function; splitting the intervals
/// makes such residuals visible to the corrector.
class SpaceTimeSolver {
 public:
  explicit SpaceTimeSolver(const SpaceTimeGrid& st, int refine = 1)
      : st_(st), fine_(st.space(), st.nt() * refine, st.t_final()), refine_(refine),
        modes_(ModalTransform::velocity(st.space())) {
    detail::require(refine >= 1, "SpaceTimeSolver: refine must be >= 1");
  }

  /// The state grid.
  const SpaceTimeGrid& grid() const { return st_; }
  /// The grid carrying the corrector.
  const SpaceTimeGrid& corrector_grid() const { return fine_; }
  int refine() const { return refine_; }

  /// K v for a field on the corrector grid.
  VectorXd apply(const VectorXd& v) const {
    const Grid2& g = fine_.space();
    const int n = g.n_vel(), nt = fine_.nt();
    const double m = g.cell_area(), ht = fine_.ht();
    detail::require(v.size() == fine_.nodal_velocity_size(), "SpaceTimeSolver: size mismatch");
    VectorXd out = VectorXd::Zero(v.size());
    for (int k = 0; k < nt; ++k) {
      const VectorXd dv = (slice(v, k + 1, n) - slice(v, k, n)) * (m / ht);
      const VectorXd mid = 0.5 * (slice(v, k, n) + slice(v, k + 1, n));
      const VectorXd a = stencil::neg_laplacian(g, mid) * (0.5 * ht * m);
      slice(out, k, n) += -dv + a;
      slice(out, k + 1, n) += dv + a;
    }
    return out;
  }

  /// Solves K v = load for a weak (already integrated) load.
  VectorXd solve_load(const VectorXd& load) const {
    detail::require(load.size() == fine_.nodal_velocity_size(), "SpaceTimeSolver: size mismatch");
    const int nt = fine_.nt();
    const double m = fine_.space().cell_area(), ht = fine_.ht();
    VectorXd modal;
    transform_slices(modes_, load, modal, nt + 1, true);
    solve_modal_time(
        modes_, modal, 0, nt,
        [&](int k, double mu) {
          const bool end = k == 0 || k == nt;
          return m * ((end ? 1.0 : 2.0) / ht + mu * ht * (end ? 0.25 : 0.5));
        },
        [&](int, double mu) { return m * (-1.0 / ht + mu * ht * 0.25); });
    VectorXd out;
    transform_slices(modes_, modal, out, nt + 1, false);
    detail_sep::check_residual((apply(out) - load).norm(), load.norm(), "spacetime_elliptic_solve");
    return out;
  }

  /// Weak load of a right-hand side constant on each state interval: every
  /// corrector interval j inside state interval k adds (hf m / 2) rhs_k to both
  /// of its end nodes.
  VectorXd interval_load(const VectorXd& rhs) const {
    const int n = st_.space().n_vel();
    detail::require(rhs.size() == st_.interval_velocity_size(),
                    "SpaceTimeSolver: interval rhs size mismatch");
    const double w = 0.5 * fine_.ht() * st_.space().cell_area();
    VectorXd load = VectorXd::Zero(fine_.nodal_velocity_size());
    for (int j = 0; j < fine_.nt(); ++j) {
      const auto r = slice(rhs, j / refine_, n);
      slice(load, j, n) += w * r;
      slice(load, j + 1, n) += w * r;
    }
    return load;
  }

  /// Transpose of interval_load without the factor m: per state interval, the
  /// time average of a corrector-grid field (trapezoid on the sub-intervals).
  VectorXd interval_average(const VectorXd& v) const {
    const int n = st_.space().n_vel();
    detail::require(v.size() == fine_.nodal_velocity_size(), "SpaceTimeSolver: size mismatch");
    VectorXd out = VectorXd::Zero(st_.interval_velocity_size());
    const double w = 0.5 / refine_;
    for (int j = 0; j < fine_.nt(); ++j)
      slice(out, j / refine_, n) += w * (slice(v, j, n) + slice(v, j + 1, n));
    return out;
  }

  /// -v_tt - Laplacian v = rhs, lateral Dirichlet, weak Neumann in time.
  VectorXd solve(const VectorXd& interval_rhs) const { return solve_load(interval_load(interval_rhs)); }

 private:
  SpaceTimeGrid st_, fine_;
  int refine_;
  ModalTransform modes_;
};

enum class Metric { a0_exact, simplified };

/// The velocity block of the A0 inner product on nodal fields:
///   sum_k tau_k m (|Y_k|^2 + <A_h Y_k, Y_k>) + sum_k ht |(Y_{k+1}-Y_k)/ht|^2_{H^-1}
/// with trapezoid weights tau_k. The simplified metric replaces the H^-1 term by
/// ht^2 times the L^2 norm of the difference quotient. Nodes outside
/// [first_free, last_free] are held at zero.
class A0VelocityMetric {
 public:
  A0VelocityMetric(const SpaceTimeGrid& st, Metric metric, int first_free, int last_free)
      : st_(st), metric_(metric), first_(first_free), last_(last_free),
        modes_(ModalTransform::velocity(st.space())),
        poisson_(st.space(), PoissonSolver::Kind::velocity) {
    detail::require(first_free >= 0 && last_free <= st.nt() && first_free <= last_free,
                    "A0VelocityMetric: bad free-node range");
  }

  Metric metric() const { return metric_; }
  int first_free() const { return first_; }
  int last_free() const { return last_; }

  /// M Y (zero rows outside the free range; the input is assumed zero there).
  VectorXd apply(const VectorXd& y) const {
    const Grid2& g = st_.space();
    const int n = g.n_vel(), nt = st_.nt();
    const double m = g.cell_area(), ht = st_.ht();
    VectorXd out = VectorXd::Zero(y.size());
    for (int k = first_; k <= last_; ++k) {
      const VectorXd yk = slice(y, k, n);
      slice(out, k, n) = st_.node_weight(k) * m * (yk + stencil::neg_laplacian(g, yk));
    }
    for (int k = 0; k < nt; ++k) {
      const VectorXd w = slice(y, k + 1, n) - slice(y, k, n);
      if (w.isZero(0)) continue;
      const VectorXd z = metric_ == Metric::a0_exact ? VectorXd(poisson_.solve(w) * (m / ht))
                                                     : VectorXd(w * (ht * m));
      if (k >= first_ && k <= last_) slice(out, k, n) -= z;
      if (k + 1 >= first_ && k + 1 <= last_) slice(out, k + 1, n) += z;
    }
    return out;
  }

  double norm_sq(const VectorXd& y) const { return y.dot(apply(y)); }
  double inner(const VectorXd& a, const VectorXd& b) const { return a.dot(apply(b)); }

  /// Riesz solve M Y = dual on the free nodes.
  VectorXd solve(const VectorXd& dual) const {
    const int nt = st_.nt(), n = st_.space().n_vel();
    const double m = st_.space().cell_area(), ht = st_.ht();
    detail::require(dual.size() == st_.nodal_velocity_size(), "A0VelocityMetric: size mismatch");
    auto coupling = [&](double mu) {
      return metric_ == Metric::a0_exact ? m / (mu * ht) : ht * m;
    };
    VectorXd modal;
    transform_slices(modes_, dual, modal, nt + 1, true);
    solve_modal_time(
        modes_, modal, first_, last_,
        [&](int k, double mu) {
          const int links = (k > 0 ? 1 : 0) + (k < nt ? 1 : 0);
          return st_.node_weight(k) * m * (1 + mu) + links * coupling(mu);
        },
        [&](int, double mu) { return -coupling(mu); });
    for (int k = 0; k <= nt; ++k)
      if (k < first_ || k > last_) slice(modal, k, n).setZero();
    VectorXd out;
    transform_slices(modes_, modal, out, nt + 1, false);
    VectorXd masked = dual;
    for (int k = 0; k <= nt; ++k)
      if (k < first_ || k > last_) slice(masked, k, n).setZero();
    detail_sep::check_residual((apply(out) - masked).norm(), masked.norm(), "a0_riesz_solve");
    return out;
  }

 private:
  SpaceTimeGrid st_;
  Metric metric_;
  int first_, last_;
  ModalTransform modes_;
  PoissonSolver poisson_;
};

}  // namespace lsqctrl
