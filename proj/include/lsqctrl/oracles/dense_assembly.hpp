#pragma once

// Brute-force dense assembly of the space-time least-squares problem on tiny
// grids. The MAC operators are rebuilt here entry by entry from the grid layout
// (no stencil code is reused), and the whole map (y, pi, f) -> (v, div y + eps pi)
// becomes one dense matrix T, so the abstract dense engine can be run on it.
//
// X coordinates: [ y at all nt+1 nodes | pi on intervals | f on intervals | 1 ].
// Y coordinates: [ v at the corrector-grid nodes | D ybar + eps pi | D (y_{k+1} - y_k)/sqrt(12) ].
// The trailing constant carries the data term, so s = u0 + H c with u0 holding
// y = s_A and the constant 1.

#include <Eigen/Dense>
#include <cmath>

#include "lsqctrl/abstract_descent.hpp"
#include "lsqctrl/grid.hpp"
#include "lsqctrl/stokes_control.hpp"

namespace lsqctrl::oracles {

using Eigen::MatrixXd;

struct DenseOperators {
  MatrixXd neg_laplacian;  ///< A_h, n_vel x n_vel
  MatrixXd divergence;     ///< D, n_cell x n_vel
  MatrixXd gradient;       ///< G, n_vel x n_cell
};

namespace detail_dense {

// 1-D second difference on n unknowns, scaled by 1/h^2; ends 2 (Dirichlet node)
// or 3 (odd reflection half a cell off the wall).
inline MatrixXd second_difference(int n, double h, bool reflected) {
  MatrixXd t = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    t(i, i) = 2;
    if (i + 1 < n) t(i, i + 1) = t(i + 1, i) = -1;
  }
  if (reflected) {
    t(0, 0) = 3;
    t(n - 1, n - 1) = 3;
  }
  return t / (h * h);
}

inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// (faces+1) x faces matrix taking interior face values (walls zero) to cell
// differences.
inline MatrixXd face_to_cell_difference(int faces, double h) {
  MatrixXd d = MatrixXd::Zero(faces + 1, faces);
  for (int c = 0; c <= faces; ++c) {
    if (c < faces) d(c, c) += 1 / h;
    if (c > 0) d(c, c - 1) -= 1 / h;
  }
  return d;
}

}  // namespace detail_dense

/// MAC operators as Kronecker products (x index fastest, so kron(Y-part, X-part)).
inline DenseOperators dense_operators(const Grid2& g) {
  using namespace detail_dense;
  const int nx = g.nx(), ny = g.ny();
  const double hx = g.hx(), hy = g.hy();
  const MatrixXd ix_node = MatrixXd::Identity(nx, nx), ix_cell = MatrixXd::Identity(nx + 1, nx + 1);
  const MatrixXd iy_node = MatrixXd::Identity(ny, ny), iy_cell = MatrixXd::Identity(ny + 1, ny + 1);
  DenseOperators op;
  const MatrixXd au = kron(iy_cell, second_difference(nx, hx, false)) + kron(second_difference(ny + 1, hy, true), ix_node);
  const MatrixXd av = kron(iy_node, second_difference(nx + 1, hx, true)) + kron(second_difference(ny, hy, false), ix_cell);
  op.neg_laplacian = MatrixXd::Zero(g.n_vel(), g.n_vel());
  op.neg_laplacian.topLeftCorner(g.n_u(), g.n_u()) = au;
  op.neg_laplacian.bottomRightCorner(g.n_v(), g.n_v()) = av;
  op.divergence = MatrixXd(g.n_cell(), g.n_vel());
  op.divergence.leftCols(g.n_u()) = kron(iy_cell, face_to_cell_difference(nx, hx));
  op.divergence.rightCols(g.n_v()) = kron(face_to_cell_difference(ny, hy), ix_cell);
  op.gradient = -op.divergence.transpose();
  return op;
}

struct DenseAssembly {
  abstract::LsqProblem problem;
  int n_vel = 0, n_cell = 0, nt = 0;
  Eigen::Index off_pi = 0, off_f = 0, off_one = 0;
  std::vector<Eigen::Index> h_rows;  ///< for each H coordinate, the X row it mostly lives on

  /// X coordinates of a triplet (with the trailing constant set to `one`).
  VectorXd to_x(const Triplet& s, double one = 1.0) const {
    VectorXd x(problem.x.dim());
    x << s.y, s.pi, s.f, one;
    return x;
  }
  Triplet from_x(const VectorXd& x) const {
    return {x.head(off_pi), x.segment(off_pi, off_f - off_pi), x.segment(off_f, off_one - off_f)};
  }
  /// H coordinates of a direction (exact for admissible directions).
  VectorXd to_h(const Direction& d) const {
    const VectorXd x = to_x(d, 0.0);
    VectorXd c(problem.h_dim());
    for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = x(h_rows[j]);
    return c;
  }
  Direction from_h(const VectorXd& c) const { return from_x(problem.h_basis * c); }
};

/// Dense (X, Y, T, H, u0) realization of a space-time problem; at most 2000 X unknowns.
inline DenseAssembly dense_assemble(const ControlProblem& p, const StokesOptions& opt = {}) {
  p.validate();
  const SpaceTimeGrid& st = p.grid;
  const Grid2& g = st.space();
  const int nv = g.n_vel(), nc = g.n_cell(), nt = st.nt();
  const double m = g.cell_area(), ht = st.ht();
  const Eigen::Index ny_tot = Eigen::Index(nt + 1) * nv, npi = Eigen::Index(nt) * nc, nf = Eigen::Index(nt) * nv;
  const Eigen::Index nx_tot = ny_tot + npi + nf + 1;
  detail::require(nx_tot <= 2000, "dense_assemble: more than 2000 unknowns");

  const DenseOperators op = dense_operators(g);
  const MatrixXd& A = op.neg_laplacian;
  const MatrixXd I = MatrixXd::Identity(nv, nv);
  const VectorXd mask = p.mask.weights(st);
  const bool control = p.mode == Mode::null_control;

  DenseAssembly out{abstract::LsqProblem{abstract::InnerProductSpace::identity(1), abstract::InnerProductSpace::identity(1),
                                         MatrixXd(), MatrixXd(), VectorXd()},
                    nv, nc, nt, ny_tot, ny_tot + npi, ny_tot + npi + nf, {}};

  // Residual R = Rmat x on intervals.
  MatrixXd rmat = MatrixXd::Zero(nf, nx_tot);
  for (int k = 0; k < nt; ++k) {
    auto rows = rmat.middleRows(Eigen::Index(k) * nv, nv);
    rows.middleCols(Eigen::Index(k) * nv, nv) += -I / ht + 0.5 * p.nu * A;
    rows.middleCols(Eigen::Index(k + 1) * nv, nv) += I / ht + 0.5 * p.nu * A;
    rows.middleCols(ny_tot + Eigen::Index(k) * nc, nc) += op.gradient;
    rows.middleCols(ny_tot + npi + Eigen::Index(k) * nv, nv) -= mask.segment(Eigen::Index(k) * nv, nv).asDiagonal();
    if (p.forcing.size() > 0) rows.col(nx_tot - 1) -= p.forcing.segment(Eigen::Index(k) * nv, nv);
  }
  // Corrector time grid: every state interval split into rf pieces of length hf.
  const int rf = opt.corrector_refine, ntf = nt * rf;
  const double hf = ht / rf;
  const Eigen::Index nv_f = Eigen::Index(ntf + 1) * nv;
  // Weak load, fine hat functions against interval-constant residuals.
  MatrixXd load = MatrixXd::Zero(nv_f, nf);
  for (int j = 0; j < ntf; ++j) {
    const Eigen::Index col = Eigen::Index(j / rf) * nv;
    load.block(Eigen::Index(j) * nv, col, nv, nv) += 0.5 * hf * m * I;
    load.block(Eigen::Index(j + 1) * nv, col, nv, nv) += 0.5 * hf * m * I;
  }
  // Corrector operator K.
  MatrixXd kmat = MatrixXd::Zero(nv_f, nv_f);
  for (int j = 0; j < ntf; ++j) {
    const MatrixXd dt = (m / hf) * I, mid = (0.25 * hf * m) * A;
    const Eigen::Index a = Eigen::Index(j) * nv, b = Eigen::Index(j + 1) * nv;
    kmat.block(a, a, nv, nv) += dt + mid;
    kmat.block(b, b, nv, nv) += dt + mid;
    kmat.block(a, b, nv, nv) += -dt + mid;
    kmat.block(b, a, nv, nv) += -dt + mid;
  }
  Eigen::LLT<MatrixXd> kllt(kmat);
  if (kllt.info() != Eigen::Success) throw SolverError("dense_assemble: K not positive definite");
  const MatrixXd tv = -kllt.solve(load * rmat);

  // Divergence block q = D ybar + eps pi.
  MatrixXd tq = MatrixXd::Zero(npi, nx_tot);
  if (opt.include_divergence) {
    for (int k = 0; k < nt; ++k) {
      auto rows = tq.middleRows(Eigen::Index(k) * nc, nc);
      rows.middleCols(Eigen::Index(k) * nv, nv) += 0.5 * op.divergence;
      rows.middleCols(Eigen::Index(k + 1) * nv, nv) += 0.5 * op.divergence;
      rows.middleCols(ny_tot + Eigen::Index(k) * nc, nc) += p.epsilon * MatrixXd::Identity(nc, nc);
    }
  }
  // Jump block D (y_{k+1} - y_k)/sqrt(12): exact time integration of |div y|^2.
  MatrixXd tj = MatrixXd::Zero(npi, nx_tot);
  if (opt.include_divergence) {
    const double c = 1 / std::sqrt(12.0);
    for (int k = 0; k < nt; ++k) {
      auto rows = tj.middleRows(Eigen::Index(k) * nc, nc);
      rows.middleCols(Eigen::Index(k) * nv, nv) -= c * op.divergence;
      rows.middleCols(Eigen::Index(k + 1) * nv, nv) += c * op.divergence;
    }
  }
  MatrixXd t(nv_f + 2 * npi, nx_tot);
  t << tv, tq, tj;

  MatrixXd ygram = MatrixXd::Zero(nv_f + 2 * npi, nv_f + 2 * npi);
  ygram.topLeftCorner(nv_f, nv_f) = kmat;
  ygram.bottomRightCorner(2 * npi, 2 * npi) = ht * m * MatrixXd::Identity(2 * npi, 2 * npi);

  // A0 gram on X.
  MatrixXd xgram = MatrixXd::Zero(nx_tot, nx_tot);
  const MatrixXd coupling = p.metric == Metric::a0_exact ? MatrixXd((m / ht) * A.inverse()) : MatrixXd(ht * m * I);
  for (int k = 0; k <= nt; ++k) {
    const Eigen::Index a = Eigen::Index(k) * nv;
    xgram.block(a, a, nv, nv) += st.node_weight(k) * m * (I + A);
    if (k < nt) {
      const Eigen::Index b = a + nv;
      xgram.block(a, a, nv, nv) += coupling;
      xgram.block(b, b, nv, nv) += coupling;
      xgram.block(a, b, nv, nv) -= coupling;
      xgram.block(b, a, nv, nv) -= coupling;
    }
  }
  xgram.block(ny_tot, ny_tot, npi + nf, npi + nf) = ht * m * MatrixXd::Identity(npi + nf, npi + nf);
  xgram(nx_tot - 1, nx_tot - 1) = 1;
  xgram = 0.5 * (xgram + xgram.transpose()).eval();

  // H basis: free velocity nodes, zero-mean pressures, masked controls.
  const int first = 1, last = control ? nt - 1 : nt;
  std::vector<VectorXd> cols;
  for (int k = first; k <= last; ++k)
    for (int i = 0; i < nv; ++i) {
      out.h_rows.push_back(Eigen::Index(k) * nv + i);
      cols.push_back(VectorXd::Unit(nx_tot, out.h_rows.back()));
    }
  if (!opt.freeze_pressure)
    for (int k = 0; k < nt; ++k)
      for (int i = 0; i + 1 < nc; ++i) {
        const Eigen::Index r = ny_tot + Eigen::Index(k) * nc;
        VectorXd c = VectorXd::Zero(nx_tot);
        c(r + i) = 1;
        c(r + nc - 1) = -1;
        out.h_rows.push_back(r + i);
        cols.push_back(c);
      }
  if (control)
    for (Eigen::Index i = 0; i < nf; ++i)
      if (mask(i) != 0) {
        out.h_rows.push_back(ny_tot + npi + i);
        cols.push_back(VectorXd::Unit(nx_tot, ny_tot + npi + i));
      }
  MatrixXd h(nx_tot, Eigen::Index(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) h.col(Eigen::Index(j)) = cols[j];

  VectorXd u0 = VectorXd::Zero(nx_tot);
  for (int k = 0; k <= nt; ++k) {
    const double eta = control ? 1.0 - double(k) / nt : 1.0;
    u0.segment(Eigen::Index(k) * nv, nv) = eta * p.y0;
  }
  u0(nx_tot - 1) = 1;

  out.problem = abstract::LsqProblem{abstract::InnerProductSpace(xgram), abstract::InnerProductSpace(ygram), t, h, u0};
  return out;
}

}  // namespace lsqctrl::oracles
