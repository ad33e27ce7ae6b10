#pragma once

#include <span>
#include <vector>

namespace lsqctrl {

// Thomas algorithm for a symmetric positive-definite tridiagonal system.
// `diag` has n entries, `off` has n-1 (sub == super). Solves in place on `rhs`.
// No pivoting: callers only pass SPD matrices.
inline void solve_spd_tridiagonal(std::span<const double> diag, std::span<const double> off,
                                  std::span<double> rhs, std::vector<double>& work) {
  const std::size_t n = diag.size();
  if (n == 0) return;
  work.resize(n);
  double denom = diag[0];
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    work[i] = off[i - 1] / denom;
    denom = diag[i] - off[i - 1] * work[i];
    rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i > 0; --i) rhs[i - 1] -= work[i] * rhs[i];
}

}  // namespace lsqctrl
