#include "lamn/runner.hpp"

#include <iostream>
#include <set>

#include "lamn/blockcov.hpp"
#include "lamn/linalg.hpp"
#include "lamn/information.hpp"
#include "lamn/lamn_mc.hpp"
#include "lamn/qmle.hpp"
#include "lamn/rng.hpp"
#include "lamn/score.hpp"
#include "lamn/simulate.hpp"

namespace lamn::run {

namespace {

using io::json;
namespace fs = std::filesystem;

const std::set<std::string> kCommonKeys = {"command", "model", "params", "dims", "scheme",
                                           "out", "threads", "seed"};

struct CommandSchema {
  std::set<std::string> keys;
  json defaults;
};

CommandSchema schema_for(const std::string& command) {
  CommandSchema s;
  s.keys = kCommonKeys;
  auto add = [&](std::initializer_list<const char*> ks) {
    for (const char* k : ks) s.keys.insert(k);
  };
  s.defaults["model"] = "langevin";
  s.defaults["seed"] = 1;
  s.defaults["threads"] = 0;
  if (command == "simulate") {
    add({"n", "substeps", "theta0"});
    s.defaults["n"] = 400;
    s.defaults["substeps"] = 16;
    s.defaults["theta0"] = 1.0;
  } else if (command == "psi") {
    add({"L", "theta0"});
    s.defaults["model"] = "integrated";
    s.defaults["L"] = 10;
    s.defaults["theta0"] = 1.0;
  } else if (command == "info") {
    add({"n", "substeps", "theta0", "psi_limit"});
    s.defaults["n"] = 400;
    s.defaults["substeps"] = 16;
    s.defaults["theta0"] = 1.0;
    s.defaults["psi_limit"] = false;
  } else if (command == "lamn-check") {
    add({"n", "M", "substeps", "e_n", "theta0", "h", "var_rel_tol", "t_rel_tol", "ks", "quiet"});
    s.defaults["n"] = 400;
    s.defaults["M"] = 5000;
    s.defaults["substeps"] = 16;
    s.defaults["e_n"] = 0;
    s.defaults["theta0"] = 1.0;
    s.defaults["h"] = 1.0;
    s.defaults["var_rel_tol"] = 0.05;
    s.defaults["t_rel_tol"] = 0.02;
    s.defaults["ks"] = true;
    s.defaults["quiet"] = false;
  } else if (command == "factor-two") {
    add({"n", "M", "substeps", "e_n", "theta0"});
    s.defaults["n"] = 1000;
    s.defaults["M"] = 3000;
    s.defaults["substeps"] = 16;
    s.defaults["e_n"] = 0;
    s.defaults["theta0"] = 1.0;
  } else if (command == "estimate") {
    add({"n", "substeps", "e_n", "theta0", "theta_init"});
    s.defaults["n"] = 400;
    s.defaults["substeps"] = 16;
    s.defaults["e_n"] = 0;
    s.defaults["theta0"] = 1.0;
    s.defaults["theta_init"] = json();  // box center when null
  } else if (command == "study") {
    add({"n", "M", "substeps", "e_n", "theta0", "var_rel_tol"});
    s.defaults["n"] = 400;
    s.defaults["M"] = 1000;
    s.defaults["substeps"] = 16;
    s.defaults["e_n"] = 0;
    s.defaults["theta0"] = 1.0;
    s.defaults["var_rel_tol"] = json();  // no check unless given
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return s;
}

json model_config(const json& cfg) {
  json m;
  m["name"] = cfg.at("model");
  if (cfg.contains("params")) m["params"] = cfg.at("params");
  if (cfg.contains("dims")) m["dims"] = cfg.at("dims");
  if (cfg.contains("scheme")) m["scheme"] = cfg.at("scheme");
  return m;
}

VectorXd theta_from(const json& cfg, const char* key, const model::ModelSpec& spec) {
  const VectorXd v = io::vector_from_json(cfg.at(key));
  if (v.size() == 1 && spec.d > 1) return VectorXd::Constant(spec.d, v(0));
  if (v.size() != spec.d) throw ConfigError(std::string(key) + " has wrong dimension");
  return v;
}

int run_simulate(const json& cfg, const fs::path& out) {
  auto built = io::model_from_json(model_config(cfg));
  const VectorXd theta0 = theta_from(cfg, "theta0", built.spec);
  const auto path = sim::simulate_path(built.spec, theta0, cfg.at("n").get<int>(),
                                       cfg.at("substeps").get<int>(),
                                       cfg.at("seed").get<std::uint64_t>());
  const auto obs = sim::observe(path, built.scheme, built.spec);

  std::vector<std::string> header = {"time"};
  if (obs.kind == model::SchemeKind::Complete) {
    for (int i = 0; i < built.spec.m; ++i) header.push_back("y" + std::to_string(i + 1));
  } else {
    for (int i = 0; i < built.scheme.q1; ++i) header.push_back("qy" + std::to_string(i + 1));
    for (int i = 0; i < built.scheme.q2; ++i) header.push_back("ycheck" + std::to_string(i + 1));
  }
  MatrixXd rows(obs.rows.rows(), obs.rows.cols() + 1);
  for (Eigen::Index k = 0; k < obs.rows.rows(); ++k) {
    rows(k, 0) = static_cast<double>(k) / obs.n;
    rows.row(k).tail(obs.rows.cols()) = obs.rows.row(k);
  }
  io::write_csv(out / "observations.csv", header, rows);

  json side;
  side["model"] = built.spec.name;
  side["n"] = path.n;
  side["substeps"] = path.substeps;
  side["seed"] = path.seed;
  side["theta"] = io::vector_to_json(path.theta);
  side["frame"] = "rotated";
  io::write_json(out / "observations_meta.json", side);
  std::cout << "wrote " << (out / "observations.csv").string() << "\n";
  return kOk;
}

int run_psi(const json& cfg, const fs::path& out) {
  auto built = io::model_from_json(model_config(cfg));
  if (built.scheme.kind != model::SchemeKind::Partial)
    throw ConfigError("psi: model must use a partial observation scheme");
  const VectorXd theta0 = theta_from(cfg, "theta0", built.spec);
  const int L = cfg.at("L").get<int>();
  const auto frame = model::build_frame(built.scheme, built.spec.kappa);
  const VectorXd z = built.spec.rotated_initial();
  const MatrixXd a = built.spec.a_tilde(z, theta0);
  const MatrixXd A = a * a.transpose();
  const auto psi = blockcov::psi_build(A, frame, 2, 2, L);

  std::vector<std::string> header(static_cast<size_t>(psi.dense.cols()));
  for (size_t c = 0; c < header.size(); ++c) header[c] = "c" + std::to_string(c + 1);
  io::write_csv(out / "psi.csv", header, psi.dense);

  json summary;
  summary["L"] = L;
  summary["kind"] = "22";
  summary["size"] = psi.dense.rows();
  bool pass = true;
  const bool integrated_frame =
      frame.q1 == 0 &&
      (built.scheme.B - MatrixXd::Identity(built.spec.kappa, built.spec.kappa)).norm() < 1e-14;
  if (integrated_frame) {
    const MatrixXd kron = linalg::kron(blockcov::v_matrix(L), A);
    const double err = (psi.dense - kron).cwiseAbs().maxCoeff();
    pass = err < 1e-12;
    summary["kronecker_error"] = err;
    summary["kronecker"] = pass ? "pass" : "fail";
    std::cout << "kronecker: " << (pass ? "pass" : "fail") << " (max err " << err << ")\n";
  }
  io::write_json(out / "summary.json", summary);
  return pass ? kOk : kCheckFailed;
}

int run_info(const json& cfg, const fs::path& out) {
  auto built = io::model_from_json(model_config(cfg));
  const VectorXd theta0 = theta_from(cfg, "theta0", built.spec);
  const auto path = sim::simulate_path(built.spec, theta0, cfg.at("n").get<int>(),
                                       cfg.at("substeps").get<int>(),
                                       cfg.at("seed").get<std::uint64_t>());
  json report;
  info::InfoMatrix im;
  if (built.scheme.kind == model::SchemeKind::Complete) {
    im = info::gamma_complete(path, built.spec, theta0);
  } else if (cfg.at("psi_limit").get<bool>() || !model::builtin_has_closed_form_g(built.spec.name)) {
    const auto frame = model::build_frame(built.scheme, built.spec.kappa);
    const std::vector<int> L_grid = {100, 200, 400};
    im = info::gamma_partial_psi_limit(path, built.spec, frame, theta0, L_grid);
    const auto gl = blockcov::g_limit(built.spec.rotated_initial().head(built.spec.kappa), theta0,
                                      built.spec, frame, L_grid, 0.05);
    json table = json::array();
    for (size_t i = 0; i < gl.L_grid.size(); ++i) {
      json row;
      row["L"] = gl.L_grid[i];
      row["residual"] = gl.residuals[i];
      table.push_back(row);
    }
    report["g_convergence"] = table;
    report["g_converged"] = gl.converged;
  } else {
    im = info::gamma_closed_form(built.spec.name, path, built.spec, theta0);
  }
  report["matrix"] = io::matrix_to_json(im.gamma);
  report["provenance"] = im.provenance;
  report["min_eig"] = im.min_eig;
  try {
    const auto closed = info::gamma_closed_form(built.spec.name, path, built.spec, theta0);
    report["closed_form"] = io::matrix_to_json(closed.gamma);
    report["closed_form_rel_diff"] =
        (im.gamma - closed.gamma).norm() / std::max(1e-300, closed.gamma.norm());
  } catch (const ConfigError&) {
    // no published formula for this configuration
  }
  io::write_json(out / "info.json", report);
  std::cout << "info: provenance=" << im.provenance << " min_eig=" << im.min_eig << "\n";
  return kOk;
}

int run_lamn_check(const json& cfg, const fs::path& out) {
  auto built = io::model_from_json(model_config(cfg));
  mc::LamnConfig mcfg;
  mcfg.theta0 = theta_from(cfg, "theta0", built.spec);
  mcfg.h = theta_from(cfg, "h", built.spec);
  mcfg.n = cfg.at("n").get<int>();
  mcfg.M = cfg.at("M").get<int>();
  mcfg.substeps = cfg.at("substeps").get<int>();
  mcfg.e_n = cfg.at("e_n").get<int>();
  mcfg.seed = cfg.at("seed").get<std::uint64_t>();
  mcfg.threads = cfg.at("threads").get<int>();
  mcfg.var_rel_tol = cfg.at("var_rel_tol").get<double>();
  mcfg.t_rel_tol = cfg.at("t_rel_tol").get<double>();
  mcfg.run_ks = cfg.at("ks").get<bool>();
  const auto rep = mc::run_lamn_mc(built.spec, built.scheme, mcfg);

  json report;
  report["M"] = rep.M;
  report["n"] = rep.n;
  report["failures"] = rep.failures;
  report["mean_lambda"] = rep.mean_lambda;
  report["se_lambda"] = rep.se_lambda;
  report["var_lambda"] = rep.var_lambda;
  report["var_score"] = rep.var_score;
  report["mean_exp_lambda"] = rep.mean_exp_lambda;
  report["se_exp_lambda"] = rep.se_exp_lambda;
  report["t_bar"] = io::matrix_to_json(rep.t_bar);
  report["gamma_ref"] = io::matrix_to_json(rep.gamma_ref);
  report["ks_stat"] = rep.ks_stat;
  report["ks_pvalue"] = rep.ks_pvalue;
  json crits = json::array();
  for (const auto& c : rep.criteria) {
    json jc;
    jc["name"] = c.name;
    jc["value"] = c.value;
    jc["target"] = c.target;
    jc["tolerance"] = c.tolerance;
    jc["pass"] = c.pass;
    crits.push_back(jc);
    if (!cfg.at("quiet").get<bool>())
      std::cout << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": value=" << c.value
                << " target=" << c.target << " tol=" << c.tolerance << "\n";
  }
  report["criteria"] = crits;
  report["pass"] = rep.pass;
  io::write_json(out / "report.json", report);

  MatrixXd lam(static_cast<Eigen::Index>(rep.lambdas.size()), 1);
  for (size_t i = 0; i < rep.lambdas.size(); ++i) lam(static_cast<Eigen::Index>(i), 0) = rep.lambdas[i];
  io::write_csv(out / "lambda.csv", {"lambda_hat"}, lam);
  return rep.pass ? kOk : kCheckFailed;
}

int run_factor_two(const json& cfg, const fs::path& out) {
  const VectorXd theta0 = io::vector_from_json(cfg.at("theta0"));
  const auto rep = mc::factor_two_experiment(theta0, cfg.at("n").get<int>(), cfg.at("M").get<int>(),
                                             cfg.at("seed").get<std::uint64_t>(),
                                             cfg.at("substeps").get<int>(), cfg.at("e_n").get<int>(),
                                             cfg.at("threads").get<int>());
  json report;
  report["closed_form_joint"] = rep.closed_form_joint;
  report["closed_form_integrated"] = rep.closed_form_integrated;
  report["closed_form_ratio"] = rep.closed_form_ratio;
  report["var_joint"] = rep.var_joint;
  report["var_diffusive"] = rep.var_diffusive;
  report["var_integrated"] = rep.var_integrated;
  report["ratio_joint_integrated"] = rep.ratio_joint_integrated;
  report["ratio_joint_diffusive"] = rep.ratio_joint_diffusive;
  report["partial_velocity_ratio"] = rep.partial_velocity_ratio;
  report["pass"] = rep.pass;
  io::write_json(out / "report.json", report);
  std::cout << "factor-two: closed ratio " << rep.closed_form_ratio << ", empirical joint/integrated "
            << rep.ratio_joint_integrated << (rep.pass ? " [pass]" : " [FAIL]") << "\n";
  return rep.pass ? kOk : kCheckFailed;
}

int run_estimate(const json& cfg, const fs::path& out) {
  auto built = io::model_from_json(model_config(cfg));
  const VectorXd theta0 = theta_from(cfg, "theta0", built.spec);
  const auto path = sim::simulate_path(built.spec, theta0, cfg.at("n").get<int>(),
                                       cfg.at("substeps").get<int>(),
                                       cfg.at("seed").get<std::uint64_t>());
  const auto obs = sim::observe(path, built.scheme, built.spec);
  qmle::EstimateOptions opt;
  opt.e_n = cfg.at("e_n").get<int>();
  const VectorXd init = cfg.at("theta_init").is_null() ? built.spec.theta_box.center()
                                                       : theta_from(cfg, "theta_init", built.spec);
  const auto est = qmle::estimate(obs, built.spec, built.scheme, init, opt);
  if (built.scheme.kind == model::SchemeKind::Partial) {
    // per-block score diagnostics at theta_hat: j, U components, tr V
    const int en = opt.e_n > 0 ? opt.e_n : sim::BlockLayout::default_e_n(obs.n);
    const auto frame = model::build_frame(built.scheme, built.spec.kappa);
    const auto blocks =
        sim::partial_blocks(obs, sim::BlockLayout::make(obs.n, en), built.spec, frame);
    MatrixXd rows(static_cast<Eigen::Index>(blocks.size()), built.spec.d + 2);
    for (size_t j = 0; j < blocks.size(); ++j) {
      const auto sb =
          score::u_v_stats(blocks[j], static_cast<int>(j), built.spec, frame, est.theta_hat, en);
      rows(static_cast<Eigen::Index>(j), 0) = static_cast<double>(j);
      rows.row(static_cast<Eigen::Index>(j)).segment(1, built.spec.d) = sb.u.transpose();
      rows(static_cast<Eigen::Index>(j), built.spec.d + 1) = sb.v.trace();
    }
    std::vector<std::string> header = {"j"};
    for (int i = 0; i < built.spec.d; ++i) header.push_back("u" + std::to_string(i + 1));
    header.push_back("tr_v");
    io::write_csv(out / "score_blocks.csv", header, rows);
  }
  json report;
  report["theta_hat"] = io::vector_to_json(est.theta_hat);
  report["objective"] = est.objective;
  report["iterations"] = est.iterations;
  report["converged"] = est.converged;
  report["theta0"] = io::vector_to_json(theta0);
  io::write_json(out / "estimate.json", report);
  std::cout << "theta_hat = " << est.theta_hat.transpose() << (est.converged ? "" : " (not converged)")
            << "\n";
  return est.converged ? kOk : kCheckFailed;
}

int run_study(const json& cfg, const fs::path& out) {
  auto built = io::model_from_json(model_config(cfg));
  const VectorXd theta0 = theta_from(cfg, "theta0", built.spec);
  const auto rep = qmle::estimator_study(built.spec, built.scheme, theta0, cfg.at("n").get<int>(),
                                         cfg.at("M").get<int>(), cfg.at("seed").get<std::uint64_t>(),
                                         cfg.at("substeps").get<int>(), cfg.at("e_n").get<int>(),
                                         cfg.at("threads").get<int>());
  json report;
  report["M"] = rep.M;
  report["n"] = rep.n;
  report["failures"] = rep.failures;
  report["mean_theta"] = io::vector_to_json(rep.mean_theta);
  report["scaled_cov"] = io::matrix_to_json(rep.scaled_cov);
  report["reference_inverse"] = io::matrix_to_json(rep.reference_inverse);
  bool pass = true;
  if (!cfg.at("var_rel_tol").is_null()) {
    const double tol = cfg.at("var_rel_tol").get<double>();
    const double rel = (rep.scaled_cov - rep.reference_inverse).norm() / rep.reference_inverse.norm();
    report["cov_rel_diff"] = rel;
    pass = rel <= tol;
  }
  report["pass"] = pass;
  io::write_json(out / "study.json", report);
  io::write_csv(out / "theta_hat.csv", {"theta_hat"}, rep.theta_hats);
  std::cout << "study: scaled cov " << rep.scaled_cov(0, 0) << " vs reference "
            << rep.reference_inverse(0, 0) << (pass ? " [pass]" : " [FAIL]") << "\n";
  return pass ? kOk : kCheckFailed;
}

}  // namespace

io::json resolve_config(const io::json& cfg) {
  if (!cfg.contains("command")) throw ConfigError("config needs a 'command'");
  const std::string command = cfg.at("command").get<std::string>();
  const CommandSchema schema = schema_for(command);
  for (const auto& item : cfg.items())
    if (!schema.keys.count(item.key()))
      throw ConfigError("unknown config key '" + item.key() + "' for command " + command);
  // defaults fill; sorted output for byte stability
  io::json resolved;
  resolved["command"] = command;
  std::set<std::string> keys = schema.keys;
  keys.erase("command");
  keys.erase("out");
  for (const auto& k : keys) {
    if (cfg.contains(k))
      resolved[k] = cfg.at(k);
    else if (schema.defaults.contains(k))
      resolved[k] = schema.defaults.at(k);
  }
  return resolved;
}

int dispatch(const io::json& cfg, const std::filesystem::path& out_dir) {
  const std::string command = cfg.at("command").get<std::string>();
  std::filesystem::create_directories(out_dir);
  io::json echoed = cfg;
  echoed.erase("threads");  // execution resource; results do not depend on it
  io::write_json(out_dir / "manifest.json", io::manifest(echoed));
  if (command == "simulate") return run_simulate(cfg, out_dir);
  if (command == "psi") return run_psi(cfg, out_dir);
  if (command == "info") return run_info(cfg, out_dir);
  if (command == "lamn-check") return run_lamn_check(cfg, out_dir);
  if (command == "factor-two") return run_factor_two(cfg, out_dir);
  if (command == "estimate") return run_estimate(cfg, out_dir);
  if (command == "study") return run_study(cfg, out_dir);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace lamn::run
