#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <random>

namespace testing_support {

using Eigen::VectorXd;
inline constexpr double pi = std::numbers::pi;

inline VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace testing_support
