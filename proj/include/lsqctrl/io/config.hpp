#pragma once

// Run configuration: line-based `section.key = value` text, '#' starts a comment.
// The same keys are accepted as `--section.key=value` command-line overrides.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lsqctrl/error.hpp"

namespace lsqctrl::io {

/// Invalid configuration; `key()` names the offending entry.
class ConfigError : public InputError {
 public:
  ConfigError(std::string key, const std::string& what) : InputError(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  std::string subcommand = "stokes-control";
  double lx = 1, ly = 1, t_final = 1;
  int nx = 16, ny = 16, nt = 16;
  double nu = 1;
  /// x0, x1, y0, y1 and optionally t0, t1; empty means the left third of the domain.
  std::vector<double> omega;
  int max_iter = 500;
  double tol_energy = 0, tol_grad = 0, tol_kernel = 0;
  std::string metric = "a0_exact";
  double epsilon = 0;
  std::string algorithm = "steepest";
  int corrector_refine = 2;
  int split_max_outer = 20;
  int split_inner_iter = 100;
  std::string initial = "poly_bump";
  double amplitude = 1;
  double l2_error_bound = 0;
  std::string out_dir = "out";
  int dump_every = 0;
  long long seed = 1;

  bool operator==(const RunConfig&) const = default;
};

namespace detail_cfg {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

inline int to_int32(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(key, "integer out of range");
  return static_cast<int>(x);
}

inline std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  std::string names;
  for (const char* a : allowed) {
    if (v == a) return v;
    names += std::string(names.empty() ? "" : ", ") + a;
  }
  throw ConfigError(key, "expected one of {" + names + "}, got '" + v + "'");
}

}  // namespace detail_cfg

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"stokes-control", "stokes-direct", "steady-nse", "abstract-demo"};
  return s;
}

/// Sets one key; unknown keys and malformed values throw ConfigError.
inline void set_key(RunConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail_cfg;
  const std::string v = trim(raw);
  if (key == "run.subcommand") {
    for (const auto& s : subcommands())
      if (v == s) {
        c.subcommand = v;
        return;
      }
    throw ConfigError(key, "unknown subcommand '" + v + "'");
  }
  if (key == "domain.Lx") c.lx = to_double(key, v);
  else if (key == "domain.Ly") c.ly = to_double(key, v);
  else if (key == "time.T") c.t_final = to_double(key, v);
  else if (key == "grid.nx") c.nx = to_int32(key, v);
  else if (key == "grid.ny") c.ny = to_int32(key, v);
  else if (key == "grid.nt") c.nt = to_int32(key, v);
  else if (key == "physics.nu") c.nu = to_double(key, v);
  else if (key == "control.omega") {
    c.omega.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) c.omega.push_back(to_double(key, trim(item)));
    if (c.omega.size() != 4 && c.omega.size() != 6) throw ConfigError(key, "expected x0,x1,y0,y1[,t0,t1]");
  } else if (key == "solver.max_iter") c.max_iter = to_int32(key, v);
  else if (key == "solver.tol_energy") c.tol_energy = to_double(key, v);
  else if (key == "solver.tol_grad") c.tol_grad = to_double(key, v);
  else if (key == "solver.tol_kernel") c.tol_kernel = to_double(key, v);
  else if (key == "solver.metric") c.metric = one_of(key, v, {"a0_exact", "simplified"});
  else if (key == "solver.epsilon") c.epsilon = to_double(key, v);
  else if (key == "solver.algorithm") c.algorithm = one_of(key, v, {"steepest", "split"});
  else if (key == "solver.corrector_refine") c.corrector_refine = to_int32(key, v);
  else if (key == "solver.l2_error_bound") c.l2_error_bound = to_double(key, v);
  else if (key == "split.max_outer") c.split_max_outer = to_int32(key, v);
  else if (key == "split.inner_iter") c.split_inner_iter = to_int32(key, v);
  else if (key == "data.initial") c.initial = one_of(key, v, {"poly_bump", "curl_bump", "zero"});
  else if (key == "data.amplitude") c.amplitude = to_double(key, v);
  else if (key == "io.out_dir") {
    if (v.empty()) throw ConfigError(key, "must not be empty");
    c.out_dir = v;
  } else if (key == "io.dump_every") c.dump_every = to_int32(key, v);
  else if (key == "seed") c.seed = to_int(key, v);
  else throw ConfigError(key, "unknown key");
}

/// Range checks, and resolves the default control region.
inline void validate(RunConfig& c) {
  auto need = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
  };
  need(c.lx > 0, "domain.Lx", "must be positive");
  need(c.ly > 0, "domain.Ly", "must be positive");
  need(c.t_final > 0, "time.T", "must be positive");
  need(c.nx >= 2, "grid.nx", "must be >= 2");
  need(c.ny >= 2, "grid.ny", "must be >= 2");
  need(c.nt >= 2, "grid.nt", "must be >= 2");
  need(c.nu > 0, "physics.nu", "must be positive");
  need(c.max_iter >= 0, "solver.max_iter", "must be >= 0");
  need(c.tol_energy >= 0, "solver.tol_energy", "must be >= 0");
  need(c.tol_grad >= 0, "solver.tol_grad", "must be >= 0");
  need(c.tol_kernel >= 0, "solver.tol_kernel", "must be >= 0");
  need(c.epsilon >= 0, "solver.epsilon", "must be >= 0");
  need(c.corrector_refine >= 1, "solver.corrector_refine", "must be >= 1");
  need(c.l2_error_bound >= 0, "solver.l2_error_bound", "must be >= 0");
  need(c.split_max_outer >= 0, "split.max_outer", "must be >= 0");
  need(c.split_inner_iter >= 0, "split.inner_iter", "must be >= 0");
  need(c.dump_every >= 0, "io.dump_every", "must be >= 0");
  need(c.amplitude >= 0, "data.amplitude", "must be >= 0");
  if (c.omega.empty()) c.omega = {0, c.lx / 3, 0, c.ly};
  const auto& w = c.omega;
  const double tol = 1e-12 * std::max(c.lx, c.ly);
  need(w[0] < w[1] && w[2] < w[3], "control.omega", "empty rectangle");
  need(w[0] >= -tol && w[2] >= -tol && w[1] <= c.lx + tol && w[3] <= c.ly + tol, "control.omega",
       "rectangle outside the domain");
  if (w.size() == 6) {
    need(w[4] < w[5], "control.omega", "empty time window");
    need(w[4] >= 0 && w[5] <= c.t_final + 1e-12 * c.t_final, "control.omega", "time window outside [0, T]");
  }
  need(c.algorithm != "split" || c.subcommand == "stokes-control", "solver.algorithm",
       "split is only available for stokes-control");
}

/// Parses `section.key = value` lines into `c`.
inline void parse_text(RunConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string t = detail_cfg::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected 'section.key = value'");
    set_key(c, detail_cfg::trim(std::string_view(t).substr(0, eq)), t.substr(eq + 1));
  }
}

inline void parse_file(RunConfig& c, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  parse_text(c, ss.str());
}

/// Canonical text: every key, fixed order, numbers with 17 significant digits.
inline std::string emit(const RunConfig& c) {
  using detail_cfg::num;
  std::string omega;
  for (double x : c.omega) omega += (omega.empty() ? "" : ",") + num(x);
  std::ostringstream o;
  o << "run.subcommand = " << c.subcommand << "\n"
    << "domain.Lx = " << num(c.lx) << "\n"
    << "domain.Ly = " << num(c.ly) << "\n"
    << "time.T = " << num(c.t_final) << "\n"
    << "grid.nx = " << c.nx << "\n"
    << "grid.ny = " << c.ny << "\n"
    << "grid.nt = " << c.nt << "\n"
    << "physics.nu = " << num(c.nu) << "\n";
  if (!omega.empty()) o << "control.omega = " << omega << "\n";
  o << "solver.max_iter = " << c.max_iter << "\n"
    << "solver.tol_energy = " << num(c.tol_energy) << "\n"
    << "solver.tol_grad = " << num(c.tol_grad) << "\n"
    << "solver.tol_kernel = " << num(c.tol_kernel) << "\n"
    << "solver.metric = " << c.metric << "\n"
    << "solver.epsilon = " << num(c.epsilon) << "\n"
    << "solver.algorithm = " << c.algorithm << "\n"
    << "solver.corrector_refine = " << c.corrector_refine << "\n"
    << "solver.l2_error_bound = " << num(c.l2_error_bound) << "\n"
    << "split.max_outer = " << c.split_max_outer << "\n"
    << "split.inner_iter = " << c.split_inner_iter << "\n"
    << "data.initial = " << c.initial << "\n"
    << "data.amplitude = " << num(c.amplitude) << "\n"
    << "io.out_dir = " << c.out_dir << "\n"
    << "io.dump_every = " << c.dump_every << "\n"
    << "seed = " << c.seed << "\n";
  return o.str();
}

}  // namespace lsqctrl::io
