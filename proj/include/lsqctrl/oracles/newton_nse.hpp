#pragma once

// Dense reference for the steady Navier-Stokes least-squares problem. The flux-form
// convection is assembled from 1-D averaging and differencing matrices (no stencil
// code), with its Jacobian by the product rule. On top of it:
//   - corrector, energy and Riesz gradient computed with dense factorizations and
//     the Jacobian transpose;
//   - a Newton solve of the discrete system
//       nu A y + N(y) + G pi = f,  D y + eps pi + lambda 1 = 0,  1^T pi = 0,
//     bordered by the mean constraint (lambda vanishes at the solution).

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "lsqctrl/error.hpp"
#include "lsqctrl/oracles/dense_assembly.hpp"
#include "lsqctrl/steady_nse.hpp"

namespace lsqctrl::oracles {

namespace detail_nse {

// Node values (n interior, wall zeros) to the n+1 cells between them.
inline MatrixXd average_node_to_cell(int n) {
  MatrixXd a = MatrixXd::Zero(n + 1, n);
  for (int c = 0; c <= n; ++c) {
    if (c < n) a(c, c) += 0.5;
    if (c > 0) a(c, c - 1) += 0.5;
  }
  return a;
}

// n+1 cell values to the n interior nodes.
inline MatrixXd average_cell_to_node(int n) {
  MatrixXd a = MatrixXd::Zero(n, n + 1);
  for (int i = 0; i < n; ++i) a(i, i) = a(i, i + 1) = 0.5;
  return a;
}

inline MatrixXd difference_cell_to_node(int n, double h) {
  MatrixXd d = MatrixXd::Zero(n, n + 1);
  for (int i = 0; i < n; ++i) {
    d(i, i) = -1 / h;
    d(i, i + 1) = 1 / h;
  }
  return d;
}

}  // namespace detail_nse

class DenseNse {
 public:
  explicit DenseNse(SteadyProblem p) : p_((p.validate(), std::move(p))), op_(dense_operators(p_.grid)) {
    using namespace detail_nse;
    using detail_dense::face_to_cell_difference;
    using detail_dense::kron;
    const Grid2& g = p_.grid;
    const int nx = g.nx(), ny = g.ny();
    detail::require(g.n_vel() + g.n_cell() <= 4000, "DenseNse: grid too large for dense factorization");
    const double hx = g.hx(), hy = g.hy();
    const MatrixXd ixn = MatrixXd::Identity(nx, nx), ixc = MatrixXd::Identity(nx + 1, nx + 1);
    const MatrixXd iyn = MatrixXd::Identity(ny, ny), iyc = MatrixXd::Identity(ny + 1, ny + 1);
    u_cell_ = kron(iyc, average_node_to_cell(nx));
    v_cell_ = kron(average_node_to_cell(ny), ixc);
    u_vert_ = kron(average_cell_to_node(ny), ixn);
    v_vert_ = kron(iyn, average_cell_to_node(nx));
    dx_cell_to_u_ = kron(iyc, difference_cell_to_node(nx, hx));
    dy_vert_to_u_ = kron(face_to_cell_difference(ny, hy), ixn);
    dx_vert_to_v_ = kron(iyn, face_to_cell_difference(nx, hx));
    dy_cell_to_v_ = kron(difference_cell_to_node(ny, hy), ixc);
    a_lu_.compute(op_.neg_laplacian);
  }

  const DenseOperators& operators() const { return op_; }

  /// div(y (x) y) in flux form.
  VectorXd convection(const VectorXd& y) const {
    const Grid2& g = p_.grid;
    const VectorXd u = y.head(g.n_u()), v = y.tail(g.n_v());
    const VectorXd uc = u_cell_ * u, vc = v_cell_ * v, uv = (u_vert_ * u).cwiseProduct(v_vert_ * v);
    VectorXd out(g.n_vel());
    out.head(g.n_u()) = dx_cell_to_u_ * uc.cwiseAbs2() + dy_vert_to_u_ * uv;
    out.tail(g.n_v()) = dx_vert_to_v_ * uv + dy_cell_to_v_ * vc.cwiseAbs2();
    return out;
  }

  /// Jacobian of `convection` at y.
  MatrixXd convection_jacobian(const VectorXd& y) const {
    const Grid2& g = p_.grid;
    const int nu = g.n_u(), nv = g.n_v();
    const VectorXd u = y.head(nu), v = y.tail(nv);
    const VectorXd uc = u_cell_ * u, vc = v_cell_ * v, uvx = u_vert_ * u, vvx = v_vert_ * v;
    MatrixXd j(g.n_vel(), g.n_vel());
    j.topLeftCorner(nu, nu) = dx_cell_to_u_ * (2 * uc).asDiagonal() * u_cell_ + dy_vert_to_u_ * vvx.asDiagonal() * u_vert_;
    j.topRightCorner(nu, nv) = dy_vert_to_u_ * uvx.asDiagonal() * v_vert_;
    j.bottomLeftCorner(nv, nu) = dx_vert_to_v_ * vvx.asDiagonal() * u_vert_;
    j.bottomRightCorner(nv, nv) = dx_vert_to_v_ * uvx.asDiagonal() * v_vert_ + dy_cell_to_v_ * (2 * vc).asDiagonal() * v_cell_;
    return j;
  }

  VectorXd residual(const SteadyState& s, bool convective = true) const {
    VectorXd r = p_.nu * op_.neg_laplacian * s.y + op_.gradient * s.pi - p_.f;
    if (convective) r += convection(s.y);
    return r;
  }

  VectorXd corrector(const SteadyState& s) const { return -a_lu_.solve(residual(s)); }

  double energy(const SteadyState& s) const {
    const VectorXd v = corrector(s), q = op_.divergence * s.y + p_.epsilon * s.pi;
    return 0.5 * p_.grid.cell_area() * (v.dot(op_.neg_laplacian * v) + q.squaredNorm());
  }

  /// Riesz gradient in H^1_0 x L^2_0 from the Euclidean gradient
  ///   -m J_R^T v + m J_q^T q,  J_R = [nu A + N'(y), G],  J_q = [D, eps I].
  SteadyState gradient(const SteadyState& s) const {
    const double m = p_.grid.cell_area();
    const VectorXd v = corrector(s), q = op_.divergence * s.y + p_.epsilon * s.pi;
    const MatrixXd jr_y = p_.nu * op_.neg_laplacian + convection_jacobian(s.y);
    const VectorXd ey = -m * jr_y.transpose() * v + m * op_.divergence.transpose() * q;
    const VectorXd ep = -m * op_.gradient.transpose() * v + m * p_.epsilon * q;
    SteadyState out{a_lu_.solve(ey) / m, ep / m};
    out.pi.array() -= out.pi.mean();
    return out;
  }

  struct NewtonResult {
    SteadyState state;
    int iterations = 0;
    double residual = 0;  ///< max-norm of the full system residual
  };

  /// Newton iteration from `start`; throws SolverError when it does not reach
  /// `tol` (max-norm, relative to max(1, |f|_inf)) within `max_iter` steps.
  NewtonResult newton(SteadyState start, bool convective = true, double tol = 1e-10, int max_iter = 50) const {
    const Grid2& g = p_.grid;
    const int n = g.n_vel(), nc = g.n_cell();
    const double scale = std::max(1.0, p_.f.cwiseAbs().maxCoeff());
    NewtonResult out;
    out.state = std::move(start);
    double lambda = 0;
    auto full_residual = [&](const SteadyState& s, double lam) {
      VectorXd r(n + nc + 1);
      r.head(n) = residual(s, convective);
      r.segment(n, nc) = op_.divergence * s.y + p_.epsilon * s.pi + VectorXd::Constant(nc, lam);
      r(n + nc) = s.pi.sum();
      return r;
    };
    for (int it = 0;; ++it) {
      const VectorXd r = full_residual(out.state, lambda);
      out.residual = r.cwiseAbs().maxCoeff();
      out.iterations = it;
      if (out.residual <= tol * scale) return out;
      if (it >= max_iter || !std::isfinite(out.residual))
        throw SolverError("newton_nse: no convergence (residual " + std::to_string(out.residual) + ")");
      MatrixXd j = MatrixXd::Zero(n + nc + 1, n + nc + 1);
      j.topLeftCorner(n, n) = p_.nu * op_.neg_laplacian;
      if (convective) j.topLeftCorner(n, n) += convection_jacobian(out.state.y);
      j.block(0, n, n, nc) = op_.gradient;
      j.block(n, 0, nc, n) = op_.divergence;
      j.block(n, n, nc, nc) = p_.epsilon * MatrixXd::Identity(nc, nc);
      j.block(n, n + nc, nc, 1).setOnes();
      j.block(n + nc, n, 1, nc).setOnes();
      const VectorXd dx = j.partialPivLu().solve(-r);
      out.state.y += dx.head(n);
      out.state.pi += dx.segment(n, nc);
      lambda += dx(n + nc);
    }
  }

 private:
  SteadyProblem p_;
  DenseOperators op_;
  MatrixXd u_cell_, v_cell_, u_vert_, v_vert_;
  MatrixXd dx_cell_to_u_, dy_vert_to_u_, dx_vert_to_v_, dy_cell_to_v_;
  Eigen::PartialPivLU<MatrixXd> a_lu_;
};

/// Newton solution of the discrete steady system from the zero state.
inline SteadyState newton_nse(const SteadyProblem& p, bool convective = true) {
  return DenseNse(p).newton(SteadyState::zeros(p.grid), convective).state;
}

}  // namespace lsqctrl::oracles
