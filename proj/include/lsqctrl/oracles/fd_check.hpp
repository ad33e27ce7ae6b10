#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace lsqctrl::oracles {

struct FdRow {
  double step;
  double estimate;
  double rel_error;
};

struct FdReport {
  std::vector<FdRow> rows;
  double best_rel_error = std::numeric_limits<double>::infinity();
  double best_step = 0;
};

/// Central differences of phi(t) = F(x + t d) at t = 0 over a ladder of steps,
/// compared with a claimed directional derivative. The relative error is taken
/// against max(|claimed|, scale) so a zero derivative can still be checked.
inline FdReport fd_check(const std::function<double(double)>& phi, double claimed,
                         const std::vector<double>& steps, double scale = 0) {
  FdReport r;
  const double denom = std::max({std::abs(claimed), scale, std::numeric_limits<double>::min()});
  for (double h : steps) {
    const double est = (phi(h) - phi(-h)) / (2 * h);
    const double err = std::abs(est - claimed) / denom;
    r.rows.push_back({h, est, err});
    if (err < r.best_rel_error) {
      r.best_rel_error = err;
      r.best_step = h;
    }
  }
  return r;
}

inline std::vector<double> default_fd_ladder() { return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}; }

}  // namespace lsqctrl::oracles
