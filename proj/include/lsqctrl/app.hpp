#pragma once

// Batch runs behind the command-line tool. Every run writes, under io.out_dir,
//   config.txt    the canonical configuration
//   trace.csv     one row per iterate (outer iterate for the split scheme)
//   summary.txt   key = value lines: stop reason, final diagnostics, errors
//   final.raw     the final state; state_<iter>.raw every io.dump_every iterations
//   final_<k>.vtk one VTK file per time slice (a single file for steady runs)
// Exit codes: 0 converged, 2 invalid input, 3 iteration limit or stagnation,
// 4 solver failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <string>

#include "lsqctrl/abstract_descent.hpp"
#include "lsqctrl/initial_data.hpp"
#include "lsqctrl/io/config.hpp"
#include "lsqctrl/io/field_dump.hpp"
#include "lsqctrl/io/trace.hpp"
#include "lsqctrl/oracles/manufactured.hpp"
#include "lsqctrl/oracles/random_lsq.hpp"
#include "lsqctrl/split_iteration.hpp"
#include "lsqctrl/steady_nse.hpp"
#include "lsqctrl/stokes_control.hpp"

namespace lsqctrl::app {

enum ExitCode { exit_converged = 0, exit_input = 2, exit_not_converged = 3, exit_solver = 4 };

namespace detail_app {

inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

class Summary {
 public:
  explicit Summary(const std::string& path) : out_(path) {
    if (!out_) throw SolverError("cannot write '" + path + "'");
  }
  void put(const std::string& key, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out_ << key << " = " << buf << '\n';
  }
  void put(const std::string& key, const std::string& s) { out_ << key << " = " << s << '\n'; }

 private:
  std::ofstream out_;
};

inline std::string path(const io::RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

inline std::string numbered(const char* prefix, int k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%06d%s", prefix, k, ext);
  return buf;
}

inline SupportMask mask_of(const io::RunConfig& c) {
  SupportMask m{c.omega[0], c.omega[1], c.omega[2], c.omega[3], std::nullopt};
  if (c.omega.size() == 6) m.time_window = std::pair{c.omega[4], c.omega[5]};
  return m;
}

inline Metric metric_of(const io::RunConfig& c) { return c.metric == "simplified" ? Metric::simplified : Metric::a0_exact; }

inline DescentConfig descent_config(const io::RunConfig& c) {
  DescentConfig d;
  d.max_iter = c.max_iter;
  d.tol_energy = c.tol_energy;
  d.tol_grad = c.tol_grad;
  d.tol_kernel = c.tol_kernel;
  return d;
}

inline io::RawFile raw_of(const SpaceTimeGrid& st, const Triplet& s) {
  return {st.space().nx(), st.space().ny(), st.nt(), {{"y", s.y}, {"pi", s.pi}, {"f", s.f}}};
}

inline void dump_unsteady_vtk(const io::RunConfig& c, const SpaceTimeGrid& st, const Triplet& s) {
  const Grid2& g = st.space();
  const int n = g.n_vel(), nc = g.n_cell();
  for (int k = 0; k <= st.nt(); ++k) {
    const VectorXd y = slice(s.y, k, n);
    if (k < st.nt()) {
      const VectorXd p = slice(s.pi, k, nc), f = slice(s.f, k, n);
      io::write_vtk_slice(path(c, numbered("final_", k, ".vtk")), g, y, &p, &f);
    } else {
      io::write_vtk_slice(path(c, numbered("final_", k, ".vtk")), g, y);
    }
  }
}

inline ControlProblem control_problem(const io::RunConfig& c) {
  const SpaceTimeGrid st(Grid2(c.nx, c.ny, c.lx, c.ly), c.nt, c.t_final);
  VectorXd y0;
  if (c.initial == "poly_bump") {
    y0 = polynomial_bump_velocity(st.space(), c.amplitude);
  } else if (c.initial == "curl_bump") {
    y0 = oracles::ManufacturedCase::steady(c.lx, c.ly, c.amplitude).curl_velocity(st.space(), 0.0);
  } else {
    y0 = VectorXd::Zero(st.space().n_vel());
  }
  return ControlProblem{st, c.nu, y0, mask_of(c), Mode::null_control, c.epsilon, metric_of(c), {}};
}

inline void put_diagnostics(Summary& sum, const StokesDiagnostics& d) {
  sum.put("div_norm", d.div_norm);
  sum.put("initial_trace_error", d.initial_trace_error);
  sum.put("final_trace_norm", d.final_trace_norm);
  sum.put("residual_norm", d.residual_norm);
  sum.put("control_norm", d.control_norm);
  sum.put("max_pressure_mean", d.max_pressure_mean);
}

// Steepest descent on a space-time problem; returns the final state.
inline StokesRun run_unsteady_descent(const io::RunConfig& c, const StokesLeastSquares& ls, Summary& sum) {
  io::TraceWriter trace(path(c, "trace.csv"), io::unsteady_trace_header());
  auto run = descend(ls, descent_config(c), [&](const Triplet& s, const IterationRecord& rec) {
    const StokesDiagnostics d = ls.diagnostics(s, false);
    trace.row(rec.iter, {rec.energy, rec.grad_norm, rec.step, rec.kernel_ratio, d.div_norm, d.final_trace_norm,
                         d.control_norm});
    if (c.dump_every > 0 && rec.iter % c.dump_every == 0)
      io::write_raw(path(c, numbered("state_", rec.iter, ".raw")), raw_of(ls.grid(), s));
  });
  sum.put("reason", std::string(to_string(run.report.reason)));
  sum.put("iterations", run.report.iterates_count);
  sum.put("E0", run.report.energies.front());
  sum.put("E", run.report.energies.back());
  put_diagnostics(sum, ls.diagnostics(run.state));
  io::write_raw(path(c, "final.raw"), raw_of(ls.grid(), run.state));
  dump_unsteady_vtk(c, ls.grid(), run.state);
  return run;
}

inline int stokes_control(const io::RunConfig& c) {
  const ControlProblem p = control_problem(c);
  Summary sum(path(c, "summary.txt"));
  if (c.algorithm == "steepest") {
    StokesOptions opt;
    opt.corrector_refine = c.corrector_refine;
    const StokesLeastSquares ls(p, opt);
    const auto run = run_unsteady_descent(c, ls, sum);
    return run.report.converged ? exit_converged : exit_not_converged;
  }

  SplitConfig sc;
  sc.inner = descent_config(c);
  sc.inner.max_iter = c.split_inner_iter;
  sc.max_outer = c.split_max_outer;
  sc.tol_g = c.tol_energy;
  sc.tol_grad = c.tol_grad;
  sc.corrector_refine = c.corrector_refine;
  StokesOptions opt;
  opt.corrector_refine = c.corrector_refine;
  const StokesLeastSquares full(p, opt);
  io::TraceWriter trace(path(c, "trace.csv"), io::unsteady_trace_header());
  // Rows per outer iteration: E is the heat-corrector energy after the inner
  // descent, grad_norm |G'|, step the pressure step.
  const auto r = split_iteration(p, sc, std::nullopt, [&](const Triplet& s, const SplitRecord& rec) {
    const StokesDiagnostics d = full.diagnostics(s, false);
    trace.row(rec.outer, {rec.inner_energy, rec.grad_norm, rec.step, detail_app::nan, d.div_norm,
                          d.final_trace_norm, d.control_norm});
    if (c.dump_every > 0 && rec.outer % c.dump_every == 0)
      io::write_raw(path(c, numbered("state_", rec.outer, ".raw")), raw_of(p.grid, s));
  });
  sum.put("reason", std::string(to_string(r.reason)));
  sum.put("outer_iterations", double(r.outer.size()) - 1);
  sum.put("G", r.outer.back().g_after);
  sum.put("E", full.energy(r.state));
  put_diagnostics(sum, full.diagnostics(r.state));
  io::write_raw(path(c, "final.raw"), raw_of(p.grid, r.state));
  dump_unsteady_vtk(c, p.grid, r.state);
  return r.converged ? exit_converged : exit_not_converged;
}

inline int stokes_direct(const io::RunConfig& c) {
  const SpaceTimeGrid st(Grid2(c.nx, c.ny, c.lx, c.ly), c.nt, c.t_final);
  const auto mc = oracles::ManufacturedCase::unsteady(c.t_final, c.lx, c.ly, c.amplitude);
  ControlProblem p = oracles::manufactured_direct_problem(mc, st, c.nu, metric_of(c));
  p.epsilon = c.epsilon;
  StokesOptions opt;
  opt.corrector_refine = c.corrector_refine;
  const StokesLeastSquares ls(p, opt);
  Summary sum(path(c, "summary.txt"));
  const auto run = run_unsteady_descent(c, ls, sum);
  const auto exact = oracles::manufactured_stokes(mc, st, c.nu).exact;
  const double err = quadrature_l2(st, run.state.y - exact.y);
  sum.put("l2_error", err);
  sum.put("l2_error_bound", c.l2_error_bound);
  if (c.l2_error_bound > 0 && !(err <= c.l2_error_bound)) {
    std::cerr << "stokes-direct: L2 error " << err << " exceeds the bound " << c.l2_error_bound << "\n";
    return exit_not_converged;
  }
  return run.report.converged ? exit_converged : exit_not_converged;
}

inline int steady_nse(const io::RunConfig& c) {
  const Grid2 g(c.nx, c.ny, c.lx, c.ly);
  const auto mc = oracles::ManufacturedCase::steady(c.lx, c.ly, c.amplitude);
  const SteadyLeastSquares ls(oracles::manufactured_steady_problem(mc, g, c.nu, c.epsilon));
  SteadyConfig sc;
  sc.max_iter = c.max_iter;
  sc.tol_energy = c.tol_energy;
  sc.tol_grad = c.tol_grad;
  io::TraceWriter trace(path(c, "trace.csv"), io::steady_trace_header());
  const auto r = descend_steady(ls, sc, SteadyState::zeros(g), [&](const SteadyState& s, const SteadyRecord& rec) {
    trace.row(rec.iter, {rec.energy, rec.grad_norm, rec.step, rec.residual_norm, rec.div_norm});
    if (c.dump_every > 0 && rec.iter % c.dump_every == 0)
      io::write_raw(path(c, numbered("state_", rec.iter, ".raw")), {g.nx(), g.ny(), 0, {{"y", s.y}, {"pi", s.pi}}});
  });
  if (r.small_data_warning)
    std::cerr << "steady-nse: warning: nu^-2 |f|_H-1 = " << r.small_data_indicator
              << " exceeds 1; the solution may not be unique\n";
  const auto exact = oracles::manufactured_steady(mc, g, c.nu).exact;
  const double m = g.cell_area();
  Summary sum(path(c, "summary.txt"));
  sum.put("reason", std::string(to_string(r.reason)));
  sum.put("iterations", r.iterates_count);
  sum.put("E0", r.energies.front());
  sum.put("E", r.energies.back());
  sum.put("nse_residual_norm", r.nse_residual_norm);
  sum.put("small_data_indicator", r.small_data_indicator);
  sum.put("l2_error_y", std::sqrt(m * (r.state.y - exact.y).squaredNorm()));
  sum.put("l2_error_pi", std::sqrt(m * (r.state.pi - exact.pi).squaredNorm()));
  io::write_raw(path(c, "final.raw"), {g.nx(), g.ny(), 0, {{"y", r.state.y}, {"pi", r.state.pi}}});
  io::write_vtk_slice(path(c, "final_steady.vtk"), g, r.state.y, &r.state.pi);
  return r.converged ? exit_converged : exit_not_converged;
}

inline int abstract_demo(const io::RunConfig& c) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(c.seed));
  const auto shape = oracles::random_shape(rng);
  const auto p = oracles::random_lsq(static_cast<std::uint64_t>(c.seed), shape);
  const auto r = abstract::descend(p, VectorXd::Zero(p.h_dim()), descent_config(c));
  io::TraceWriter trace(path(c, "trace.csv"), io::unsteady_trace_header());
  for (const auto& rec : r.trace)
    trace.row(rec.iter, {rec.energy, rec.grad_norm, rec.step, rec.kernel_ratio, detail_app::nan, detail_app::nan,
                         detail_app::nan});
  const VectorXd ubar = abstract::oracle_minimizer(p);
  const VectorXd e = r.final_u - ubar;
  Summary sum(path(c, "summary.txt"));
  sum.put("reason", std::string(to_string(r.reason)));
  sum.put("iterations", r.iterates_count);
  sum.put("x_dim", shape.x_dim);
  sum.put("y_dim", shape.y_dim);
  sum.put("h_dim", shape.h_dim);
  sum.put("kernel_dim", shape.h_dim - shape.rank);
  sum.put("E", r.energies.back());
  sum.put("oracle_distance", std::sqrt(e.dot(p.h_gram() * e)));
  return r.converged ? exit_converged : exit_not_converged;
}

}  // namespace detail_app

/// Runs a validated configuration and returns the process exit code. Errors are
/// reported on stderr.
inline int run(io::RunConfig c) {
  try {
    io::validate(c);
    std::filesystem::create_directories(c.out_dir);
    {
      std::ofstream cfg(detail_app::path(c, "config.txt"));
      cfg << io::emit(c);
    }
    if (c.subcommand == "stokes-control") return detail_app::stokes_control(c);
    if (c.subcommand == "stokes-direct") return detail_app::stokes_direct(c);
    if (c.subcommand == "steady-nse") return detail_app::steady_nse(c);
    if (c.subcommand == "abstract-demo") return detail_app::abstract_demo(c);
    throw io::ConfigError("run.subcommand", "unknown subcommand '" + c.subcommand + "'");
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return exit_solver;
  }
}

}  // namespace lsqctrl::app
