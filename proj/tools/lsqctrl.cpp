// Command-line front end:
//   lsqctrl <stokes-control|stokes-direct|steady-nse|abstract-demo>
//           [--config FILE] [--print-config] [--section.key=value ...]
// Overrides are applied after the config file, in order.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "lsqctrl/app.hpp"

namespace {

// Applies `--section.key=value` / `--section.key value` tokens.
void apply_overrides(lsqctrl::io::RunConfig& cfg, const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() <= 2)
      throw lsqctrl::io::ConfigError(a, "unexpected argument (overrides look like --section.key=value)");
    const std::string body = a.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      lsqctrl::io::set_key(cfg, body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= args.size()) throw lsqctrl::io::ConfigError(body, "missing value");
      lsqctrl::io::set_key(cfg, body, args[++i]);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Least-squares solvers for Stokes null control and steady Navier-Stokes"};
  app.require_subcommand(1);
  std::string config_path;
  bool print_config = false;
  std::vector<CLI::App*> subs;
  for (const auto& name : lsqctrl::io::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration file (section.key = value lines)");
    sub->add_flag("--print-config", print_config, "print the canonical configuration and exit");
    sub->allow_extras();
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lsqctrl::app::exit_input;
  }

  lsqctrl::io::RunConfig cfg;
  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (!config_path.empty()) lsqctrl::io::parse_file(cfg, config_path);
    cfg.subcommand = chosen->get_name();
    apply_overrides(cfg, chosen->remaining());
    if (print_config) {
      lsqctrl::io::validate(cfg);
      std::cout << lsqctrl::io::emit(cfg);
      return lsqctrl::app::exit_converged;
    }
  } catch (const lsqctrl::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lsqctrl::app::exit_input;
  }
  return lsqctrl::app::run(cfg);
}
