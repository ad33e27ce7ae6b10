#pragma once

// Seeded random dense least-squares instances with a prescribed kernel size and
// controlled conditioning, for the abstract engine and its oracles.

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cstdint>
#include <random>

#include "lsqctrl/abstract_descent.hpp"

namespace lsqctrl::oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct RandomLsqShape {
  int x_dim = 0, y_dim = 0, h_dim = 0, rank = 0;
};

namespace detail_random {

inline MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

inline MatrixXd orthonormal_columns(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::HouseholderQR<MatrixXd> qr(gaussian(rng, r, r));
  return MatrixXd(qr.householderQ()).leftCols(c);
}

inline MatrixXd spd(std::mt19937_64& rng, Eigen::Index n) {
  const MatrixXd b = gaussian(rng, n, n);
  MatrixXd g = b * b.transpose() / double(n) + MatrixXd::Identity(n, n);
  return 0.5 * (g + g.transpose());
}

}  // namespace detail_random

/// Shape drawn uniformly: X.dim in [2, max_dim], H.dim in [1, X.dim],
/// Y.dim in [1, max_dim], rank of T on H in [1, min(H.dim, Y.dim)]. (With rank 0,
/// T H is zero only up to roundoff and descent would chase noise.)
inline RandomLsqShape random_shape(std::mt19937_64& rng, int max_dim = 30) {
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  RandomLsqShape s;
  s.x_dim = uniform(2, max_dim);
  s.h_dim = uniform(1, s.x_dim);
  s.y_dim = uniform(1, max_dim);
  s.rank = uniform(1, std::min(s.h_dim, s.y_dim));
  return s;
}

/// Instance whose metric-whitened T restricted to H has `rank` singular values in
/// [sigma_min, 1] and an exact kernel of dimension H.dim - rank.
inline abstract::LsqProblem random_lsq(std::uint64_t seed, RandomLsqShape shape, double sigma_min = 0.3) {
  using namespace detail_random;
  std::mt19937_64 rng(seed);
  const Eigen::Index nx = shape.x_dim, ny = shape.y_dim, nh = shape.h_dim, r = shape.rank;
  detail::require(nx >= 1 && ny >= 1 && nh >= 1 && nh <= nx && r >= 0 && r <= std::min(nh, ny),
                  "random_lsq: inconsistent shape");
  const MatrixXd gx = spd(rng, nx), gy = spd(rng, ny);
  const MatrixXd h = gaussian(rng, nx, nh);

  // Whitened operator B = Uy C Uh^{-1} with prescribed singular values.
  std::uniform_real_distribution<double> ud(sigma_min, 1.0);
  VectorXd sv(r);
  for (Eigen::Index i = 0; i < r; ++i) sv(i) = ud(rng);
  if (r > 0) sv(0) = 1.0;
  if (r > 1) sv(r - 1) = sigma_min;
  const MatrixXd ul = orthonormal_columns(rng, ny, r), vr = orthonormal_columns(rng, nh, r);
  const MatrixXd b = ul * sv.asDiagonal() * vr.transpose();
  const MatrixXd uy = Eigen::LLT<MatrixXd>(gy).matrixU();
  const MatrixXd gh = h.transpose() * gx * h;
  const MatrixXd uh = Eigen::LLT<MatrixXd>(gh).matrixU();
  const MatrixXd c = uy.triangularView<Eigen::Upper>().solve(b) * uh;  // T restricted to H

  // T = C L + Z N with L H = I and N H = 0, so T H = C exactly.
  const MatrixXd left_inverse = gh.llt().solve(h.transpose() * gx);
  MatrixXd t = c * left_inverse;
  if (nh < nx) {
    const MatrixXd complement = MatrixXd::Identity(nx, nx) - h * left_inverse;
    t += 0.5 * gaussian(rng, ny, nx) * complement;
  }
  const VectorXd u0 = gaussian(rng, nx, 1);
  return abstract::LsqProblem{abstract::InnerProductSpace(gx), abstract::InnerProductSpace(gy), t, h, u0};
}

}  // namespace lsqctrl::oracles
