#pragma once

// Steepest descent for quadratic least-squares functionals E(u) = 1/2 |T(u0 + u)|^2
// posed on a Hilbert space H. The engine is shared by the dense abstract problems
// and the space-time Stokes solver; a problem type only has to expose the energy,
// the Riesz gradient, the metric norm of a direction and the norm of its image
// under the linear part of T.

#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lsqctrl/error.hpp"

namespace lsqctrl {

enum class StepRule { exact, fixed };

enum class StopReason { energy_tol, grad_tol, max_iter, kernel_stall };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::energy_tol: return "energy_tol";
    case StopReason::grad_tol: return "grad_tol";
    case StopReason::max_iter: return "max_iter";
    case StopReason::kernel_stall: return "kernel_stall";
  }
  return "unknown";
}

struct DescentConfig {
  int max_iter = 500;
  double tol_energy = 0.0;  ///< absolute: stop once E <= tol_energy
  double tol_grad = 0.0;    ///< relative: stop once |g_k| <= tol_grad * |g_0|
  double tol_kernel = 0.0;  ///< stop once |T g_k| / |g_k| <= tol_kernel
  StepRule step_rule = StepRule::exact;
  double fixed_step = 1.0;
  bool record_trace = true;
  /// Slack on E(u_{k+1}) <= E(u_k) (relative to E(u_k), plus the same fraction of
  /// E(u_0) for roundoff near the floor) before an exact step counts as divergence.
  double monotone_slack = 1e-12;

  void validate() const {
    detail::require(max_iter >= 0, "DescentConfig: max_iter must be >= 0");
    detail::require(tol_energy >= 0 && tol_grad >= 0 && tol_kernel >= 0,
                    "DescentConfig: tolerances must be >= 0");
    detail::require(step_rule != StepRule::fixed || fixed_step > 0,
                    "DescentConfig: fixed step must be > 0");
  }
};

/// One row of the convergence trace. `step` and `kernel_ratio` describe the
/// update taken from this iterate (zero step on the final row).
struct IterationRecord {
  int iter = 0;
  double energy = 0;
  double grad_norm = 0;
  double step = 0;
  double kernel_ratio = std::numeric_limits<double>::quiet_NaN();
};

template <class Point>
struct DescentReport {
  int iterates_count = 0;  ///< number of updates performed
  std::vector<double> energies;
  std::vector<double> grad_norms;
  std::vector<IterationRecord> trace;
  Point final_u{};
  bool converged = false;
  StopReason reason = StopReason::max_iter;
};

template <class Point>
struct Evaluation {
  double energy;
  Point gradient;
};

template <class P>
concept QuadraticLeastSquares =
    requires(const P& p, typename P::Point& x, const typename P::Point& d, double eta) {
      { p.evaluate(d) } -> std::same_as<Evaluation<typename P::Point>>;
      { p.metric_norm_sq(d) } -> std::convertible_to<double>;
      { p.image_norm_sq(d) } -> std::convertible_to<double>;
      p.axpy(x, eta, d);
    };

/// Minimizing sequence u_{k+1} = u_k - eta_k g_k with g_k the Riesz gradient.
/// The exact step eta = |g|^2_H / |T g|^2_Y is the line minimizer of a quadratic.
/// `observer(u, record)` is called once per iterate, including the final one.
template <QuadraticLeastSquares P, class Observer = std::nullptr_t>
DescentReport<typename P::Point> steepest_descent(const P& problem, typename P::Point u,
                                                  const DescentConfig& cfg,
                                                  Observer&& observer = nullptr) {
  cfg.validate();
  DescentReport<typename P::Point> report;
  double g0 = 0;
  double e0 = 0;
  double previous_energy = std::numeric_limits<double>::infinity();

  for (int k = 0;; ++k) {
    Evaluation<typename P::Point> ev = problem.evaluate(u);
    const double gn2 = problem.metric_norm_sq(ev.gradient);
    const double gn = std::sqrt(std::max(gn2, 0.0));
    if (k == 0) {
      g0 = gn;
      e0 = ev.energy;
    }

    if (cfg.step_rule == StepRule::exact && k > 0 &&
        ev.energy > previous_energy * (1 + cfg.monotone_slack) + cfg.monotone_slack * e0) {
      throw DivergenceError("steepest_descent: energy increased from " +
                            std::to_string(previous_energy) + " to " + std::to_string(ev.energy) +
                            " at iteration " + std::to_string(k));
    }
    previous_energy = ev.energy;

    IterationRecord rec{k, ev.energy, gn, 0.0, std::numeric_limits<double>::quiet_NaN()};
    double tg2 = 0;
    if (gn2 > 0) {
      tg2 = problem.image_norm_sq(ev.gradient);
      rec.kernel_ratio = std::sqrt(std::max(tg2, 0.0)) / gn;
    }

    bool stop = true;
    if (ev.energy <= cfg.tol_energy) {
      report.reason = StopReason::energy_tol;
    } else if (gn2 <= 0 || gn <= cfg.tol_grad * g0) {
      report.reason = StopReason::grad_tol;
    } else if (rec.kernel_ratio <= cfg.tol_kernel || tg2 <= 0) {
      report.reason = StopReason::kernel_stall;
    } else if (k >= cfg.max_iter) {
      report.reason = StopReason::max_iter;
    } else {
      stop = false;
    }

    if (!stop) rec.step = cfg.step_rule == StepRule::exact ? gn2 / tg2 : cfg.fixed_step;

    report.energies.push_back(rec.energy);
    report.grad_norms.push_back(rec.grad_norm);
    if (cfg.record_trace) report.trace.push_back(rec);
    if constexpr (!std::is_same_v<std::decay_t<Observer>, std::nullptr_t>) observer(u, rec);

    if (stop) {
      report.converged = report.reason != StopReason::max_iter;
      report.iterates_count = k;
      report.final_u = std::move(u);
      return report;
    }
    problem.axpy(u, -rec.step, ev.gradient);
  }
}

}  // namespace lsqctrl
