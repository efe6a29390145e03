// Command-line front end: simulation, covariance construction, information
// matrices, LAMN Monte Carlo checks, and estimation studies.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "lamn/runner.hpp"
#include "lamn/verify.hpp"

namespace {

using lamn::io::json;

struct CommonArgs {
  std::string config_file;
  std::string out;
  std::string model;
  std::string params_json;
  std::string scheme_json;
  long long seed = -1;
  int threads = -1;
  int n = -1, M = -1, substeps = -1, e_n = -1, L = -1;
  double theta0 = std::numeric_limits<double>::quiet_NaN();
  double theta_init = std::numeric_limits<double>::quiet_NaN();
  double h = std::numeric_limits<double>::quiet_NaN();
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_file, "JSON config file; flags override its entries");
  cmd->add_option("--out", a.out, "output directory (default $LAMNLAB_OUT/<command> or ./out/<command>)");
  cmd->add_option("--model", a.model, "builtin model name");
  cmd->add_option("--params", a.params_json, "model params as inline JSON, e.g. '{\"kappa\":2}'");
  cmd->add_option("--scheme", a.scheme_json, "scheme override as inline JSON");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--threads", a.threads, "worker cap (0 = hardware)");
}

json build_config(const std::string& command, const CommonArgs& a) {
  json cfg;
  if (!a.config_file.empty()) {
    std::ifstream in(a.config_file);
    if (!in) throw lamn::ConfigError("cannot read config file " + a.config_file);
    in >> cfg;
  }
  cfg["command"] = command;
  auto set_if = [&](const char* key, auto value, auto unset) {
    if (value != unset) cfg[key] = value;
  };
  if (!a.model.empty()) cfg["model"] = a.model;
  if (!a.params_json.empty()) cfg["params"] = json::parse(a.params_json);
  if (!a.scheme_json.empty()) cfg["scheme"] = json::parse(a.scheme_json);
  if (a.seed >= 0) cfg["seed"] = a.seed;
  if (a.threads >= 0) cfg["threads"] = a.threads;
  set_if("n", a.n, -1);
  set_if("M", a.M, -1);
  set_if("substeps", a.substeps, -1);
  set_if("e_n", a.e_n, -1);
  set_if("L", a.L, -1);
  if (!std::isnan(a.theta0)) cfg["theta0"] = a.theta0;
  if (!std::isnan(a.theta_init)) cfg["theta_init"] = a.theta_init;
  if (!std::isnan(a.h)) cfg["h"] = a.h;
  return cfg;
}

std::filesystem::path out_dir(const std::string& command, const CommonArgs& a, const json& cfg) {
  if (!a.out.empty()) return a.out;
  if (cfg.contains("out")) return cfg.at("out").get<std::string>();
  const char* root = std::getenv("LAMNLAB_OUT");
  return std::filesystem::path(root ? root : "out") / command;
}

int run_command(const std::string& command, const CommonArgs& a) {
  json cfg = build_config(command, a);
  const auto dir = out_dir(command, a, cfg);
  cfg.erase("out");
  const json resolved = lamn::run::resolve_config(cfg);
  return lamn::run::dispatch(resolved, dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lamnlab: simulation and verification of Gaussian-approximation covariances,\n"
               "score statistics, and information matrices for degenerate diffusions"};
  app.require_subcommand(1);

  std::map<std::string, CommonArgs> args;
  const std::vector<std::string> commands = {"simulate", "psi",      "info",  "lamn-check",
                                             "factor-two", "estimate", "study"};
  for (const auto& name : commands) {
    auto* cmd = app.add_subcommand(name, "");
    auto& a = args[name];
    add_common(cmd, a);
    if (name == "simulate" || name == "info" || name == "lamn-check" || name == "factor-two" ||
        name == "estimate" || name == "study") {
      cmd->add_option("--n", a.n, "observation count");
      cmd->add_option("--substeps", a.substeps, "Euler substeps per observation interval");
      cmd->add_option("--theta0", a.theta0, "true parameter (scalar; arrays via --config)");
    }
    if (name == "lamn-check" || name == "factor-two" || name == "study")
      cmd->add_option("--M", a.M, "Monte Carlo path count");
    if (name == "lamn-check" || name == "factor-two" || name == "estimate" || name == "study")
      cmd->add_option("--e_n", a.e_n, "block length for partial schemes (0 = default)");
    if (name == "lamn-check") cmd->add_option("--hloc", a.h, "local parameter h");
    if (name == "estimate") cmd->add_option("--theta-init", a.theta_init, "optimizer start");
    if (name == "psi") cmd->add_option("--L", a.L, "number of block slots");
  }

  auto* ver = app.add_subcommand("verify", "run acceptance criteria with pinned tolerances");
  int criterion = 0;
  int ver_threads = 0;
  ver->add_option("--criterion", criterion, "criterion id 1..11 (0 = all)");
  ver->add_option("--threads", ver_threads, "worker cap (0 = hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& name : commands)
      if (app.get_subcommand(name)->parsed()) return run_command(name, args[name]);
    if (ver->parsed()) {
      std::vector<lamn::verify::CriterionResult> results;
      if (criterion == 0)
        results = lamn::verify::run_all(ver_threads);
      else
        results.push_back(lamn::verify::run_criterion(criterion, ver_threads));
      bool all = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << ": " << r.name
                  << "  (" << r.seconds << " s)\n";
        for (const auto& line : r.lines) std::cout << line << "\n";
        all = all && r.pass;
      }
      return all ? 0 : 1;
    }
  } catch (const lamn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lamn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
