#pragma once

// Dense quadratic least-squares problems E(u) = 1/2 |T(u0 + u)|_Y^2 over u in a
// closed subspace H of a finite-dimensional inner-product space X. Directions
// are expressed in coordinates of an explicit basis of H. Small enough that the
// kernel A = Ker T ∩ H and its H-orthogonal complement can be computed exactly.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "lsqctrl/descent.hpp"
#include "lsqctrl/error.hpp"

namespace lsqctrl::abstract {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// R^dim with inner product <a, b> = a^T G b for a symmetric positive-definite G.
class InnerProductSpace {
 public:
  explicit InnerProductSpace(MatrixXd gram) : gram_(std::move(gram)) {
    detail::require(gram_.rows() > 0 && gram_.rows() == gram_.cols(),
                    "InnerProductSpace: gram must be square and non-empty");
    const double scale = std::max(1.0, gram_.cwiseAbs().maxCoeff());
    detail::require((gram_ - gram_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                    "InnerProductSpace: gram is not symmetric");
    Eigen::LLT<MatrixXd> llt(gram_);
    detail::require(llt.info() == Eigen::Success,
                    "InnerProductSpace: gram is not positive definite");
  }

  static InnerProductSpace identity(Eigen::Index n) {
    return InnerProductSpace(MatrixXd::Identity(n, n));
  }

  Eigen::Index dim() const { return gram_.rows(); }
  const MatrixXd& gram() const { return gram_; }
  double inner(const VectorXd& a, const VectorXd& b) const { return a.dot(gram_ * b); }
  double norm_sq(const VectorXd& a) const { return inner(a, a); }

 private:
  MatrixXd gram_;
};

struct LsqProblem {
  InnerProductSpace x;
  InnerProductSpace y;
  MatrixXd t_map;    ///< Y.dim x X.dim
  MatrixXd h_basis;  ///< X.dim x H.dim, columns span H
  VectorXd u0;       ///< element of X

  Eigen::Index h_dim() const { return h_basis.cols(); }

  void validate() const {
    detail::require(t_map.rows() == y.dim() && t_map.cols() == x.dim(),
                    "LsqProblem: T must be Y.dim x X.dim");
    detail::require(h_basis.rows() == x.dim() && h_basis.cols() > 0,
                    "LsqProblem: H basis must have X.dim rows");
    detail::require(u0.size() == x.dim(), "LsqProblem: u0 must live in X");
    Eigen::FullPivLU<MatrixXd> lu(h_basis);
    detail::require(lu.rank() == h_basis.cols(), "LsqProblem: H basis is rank deficient");
  }

  /// Gram matrix of X restricted to H coordinates.
  MatrixXd h_gram() const { return h_basis.transpose() * x.gram() * h_basis; }
  /// T restricted to H coordinates.
  MatrixXd t_on_h() const { return t_map * h_basis; }
  /// u0 + H c as an element of X.
  VectorXd point(const VectorXd& c) const { return u0 + h_basis * c; }
};

namespace detail_dense {

inline void check_coords(const LsqProblem& p, const VectorXd& u) {
  if (u.size() != p.h_dim()) {
    throw InputError("abstract: coordinate vector has size " + std::to_string(u.size()) +
                     ", expected H.dim = " + std::to_string(p.h_dim()));
  }
}

}  // namespace detail_dense

inline double energy(const LsqProblem& p, const VectorXd& u) {
  detail_dense::check_coords(p, u);
  const VectorXd r = p.t_map * p.point(u);
  return 0.5 * p.y.norm_sq(r);
}

/// Riesz representative of E'(u0 + H u) in the H-restricted inner product.
inline VectorXd gradient(const LsqProblem& p, const VectorXd& u) {
  detail_dense::check_coords(p, u);
  const VectorXd r = p.t_map * p.point(u);
  const VectorXd dual = p.t_on_h().transpose() * (p.y.gram() * r);
  Eigen::LLT<MatrixXd> llt(p.h_gram());
  if (llt.info() != Eigen::Success) throw SolverError("abstract::gradient: singular H Gram");
  return llt.solve(dual);
}

struct KernelProjector {
  MatrixXd onto_kernel;      ///< P_A, H-orthogonal, in H coordinates
  MatrixXd onto_complement;  ///< P_{A-perp} = I - P_A
  Eigen::Index kernel_dim = 0;
};

/// Numerical kernel of T on H: right singular vectors of T H with
/// sigma <= rel_cutoff * |T|_F. The cutoff is taken against the whole operator so
/// that T H = 0 up to roundoff is recognised as a full kernel.
inline MatrixXd kernel_basis(const LsqProblem& p, double rel_cutoff = 1e-10) {
  const MatrixXd th = p.t_on_h();
  Eigen::JacobiSVD<MatrixXd> svd(th, Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const double scale = std::max(s.size() > 0 ? s(0) : 0.0, p.t_map.norm());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_cutoff * scale) ++rank;
  return svd.matrixV().rightCols(th.cols() - rank);
}

inline KernelProjector kernel_projector(const LsqProblem& p) {
  detail::require(p.x.dim() <= 2000, "kernel_projector: X.dim exceeds dense limit 2000");
  p.validate();
  const Eigen::Index n = p.h_dim();
  const MatrixXd gh = p.h_gram();
  const MatrixXd kb = kernel_basis(p);
  KernelProjector out;
  out.kernel_dim = kb.cols();
  if (kb.cols() == 0) {
    out.onto_kernel = MatrixXd::Zero(n, n);
  } else {
    const MatrixXd small = kb.transpose() * gh * kb;
    out.onto_kernel = kb * small.ldlt().solve(kb.transpose() * gh);
  }
  out.onto_complement = MatrixXd::Identity(n, n) - out.onto_kernel;
  return out;
}

/// The unique minimizer in A-perp, via the pseudoinverse of the metric-whitened T
/// (singular values below 1e-10 of the whitened |T|_F are treated as zero).
inline VectorXd oracle_minimizer(const LsqProblem& p) {
  p.validate();
  const Eigen::LLT<MatrixXd> ly(p.y.gram());
  const Eigen::LLT<MatrixXd> lh(p.h_gram());
  const Eigen::LLT<MatrixXd> lx(p.x.gram());
  const MatrixXd ly_t = ly.matrixU();  // Gy = U^T U
  const MatrixXd lh_u = lh.matrixU();  // G_H = U^T U, so w = U c
  const MatrixXd lx_u = lx.matrixU();
  const MatrixXd b = ly_t * p.t_on_h() * lh_u.triangularView<Eigen::Upper>().solve(
                                             MatrixXd::Identity(p.h_dim(), p.h_dim()));
  const MatrixXd whole = ly_t * p.t_map * lx_u.triangularView<Eigen::Upper>().solve(
                                              MatrixXd::Identity(p.x.dim(), p.x.dim()));
  const VectorXd rhs = -(ly_t * (p.t_map * p.u0));
  Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  const double scale = std::max(smax, whole.norm());
  if (scale == 0 || smax <= 1e-10 * scale) return VectorXd::Zero(p.h_dim());
  svd.setThreshold(1e-10 * scale / smax);
  const VectorXd w = svd.solve(rhs);
  return lh_u.triangularView<Eigen::Upper>().solve(w);
}

/// Adapter exposing a dense problem to the generic descent engine.
class DenseDescentProblem {
 public:
  using Point = VectorXd;

  explicit DenseDescentProblem(const LsqProblem& p)
      : p_(p), th_(p.t_on_h()), gh_(p.h_gram()), llt_(gh_) {
    if (llt_.info() != Eigen::Success) throw SolverError("descend: singular H Gram");
  }

  Evaluation<VectorXd> evaluate(const VectorXd& u) const {
    const VectorXd r = p_.t_map * p_.u0 + th_ * u;
    const VectorXd gyr = p_.y.gram() * r;
    return {0.5 * r.dot(gyr), llt_.solve(th_.transpose() * gyr)};
  }
  double metric_norm_sq(const VectorXd& d) const { return d.dot(gh_ * d); }
  double image_norm_sq(const VectorXd& d) const {
    const VectorXd td = th_ * d;
    return p_.y.norm_sq(td);
  }
  void axpy(VectorXd& x, double eta, const VectorXd& d) const { x += eta * d; }

 private:
  const LsqProblem& p_;
  MatrixXd th_;
  MatrixXd gh_;
  Eigen::LLT<MatrixXd> llt_;
};

inline DescentReport<VectorXd> descend(const LsqProblem& p, const VectorXd& u_init,
                                       const DescentConfig& cfg) {
  p.validate();
  detail_dense::check_coords(p, u_init);
  return steepest_descent(DenseDescentProblem(p), u_init, cfg);
}

}  // namespace lsqctrl::abstract
