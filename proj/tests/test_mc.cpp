#include <doctest.h>

#include "lamn/lamn_mc.hpp"
#include "lamn/rng.hpp"
#include "lamn/score.hpp"
#include "lamn/simulate.hpp"

using namespace lamn;

TEST_CASE("run_lamn_mc: smoke run hits the limit-law targets at small scale") {
  const auto built = model::builtin_model("langevin");
  mc::LamnConfig cfg;
  cfg.theta0 = VectorXd::Ones(1);
  cfg.h = VectorXd::Ones(1);
  cfg.n = 200;
  cfg.M = 600;
  cfg.substeps = 32;
  cfg.seed = 5150;
  cfg.threads = 1;
  cfg.var_rel_tol = 0.15;  // loose gates for the smoke scale
  cfg.t_rel_tol = 0.05;
  cfg.run_ks = true;
  const auto rep = mc::run_lamn_mc(built.spec, built.scheme, cfg);
  CHECK(rep.failures == 0);
  CHECK(rep.pass);
  CHECK(rep.gamma_ref(0, 0) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(rep.lambdas.size() == 600);
}

TEST_CASE("run_lamn_mc: h = 0 degenerates to Lambda = 0 and exp mean 1") {
  const auto built = model::builtin_model("langevin");
  mc::LamnConfig cfg;
  cfg.theta0 = VectorXd::Ones(1);
  cfg.h = VectorXd::Zero(1);
  cfg.n = 50;
  cfg.M = 500;
  cfg.substeps = 4;
  cfg.seed = 2;
  cfg.threads = 1;
  cfg.run_ks = false;
  cfg.var_rel_tol = 1.0;
  cfg.t_rel_tol = 1.0;
  const auto rep = mc::run_lamn_mc(built.spec, built.scheme, cfg);
  CHECK(rep.mean_lambda == 0.0);
  CHECK(rep.mean_exp_lambda == 1.0);
}

TEST_CASE("run_lamn_mc rejects tiny M") {
  const auto built = model::builtin_model("langevin");
  mc::LamnConfig cfg;
  cfg.theta0 = VectorXd::Ones(1);
  cfg.h = VectorXd::Ones(1);
  cfg.M = 100;
  CHECK_THROWS_AS(mc::run_lamn_mc(built.spec, built.scheme, cfg), ConfigError);
}

TEST_CASE("factor_two_experiment: closed-form ratios exact, empirical near 2:1:1") {
  const auto rep = mc::factor_two_experiment(VectorXd::Ones(1), 400, 600, 31337, 16, 5, 1);
  CHECK(rep.closed_form_ratio == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.partial_velocity_ratio == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(rep.ratio_joint_integrated == doctest::Approx(2.0).epsilon(0.2));
  CHECK(rep.ratio_joint_diffusive == doctest::Approx(2.0).epsilon(0.2));
  CHECK(rep.pass);
}

TEST_CASE("run_lamn_mc: stochvol partial schemes hit their targets") {
  // exercises the q1 > 0 path: observed projection rows plus reconstruction
  const auto built = model::builtin_model("stochvol-diagonal");
  mc::LamnConfig cfg;
  cfg.theta0 = VectorXd::Ones(1);
  cfg.h = VectorXd::Ones(1);
  cfg.n = 400;
  cfg.M = 800;
  cfg.substeps = 16;
  cfg.e_n = 6;
  cfg.seed = 98;
  cfg.threads = 1;
  cfg.var_rel_tol = 0.10;
  cfg.t_rel_tol = 0.03;
  const auto rep = mc::run_lamn_mc(built.spec, built.scheme, cfg);
  CHECK(rep.pass);
  CHECK(rep.gamma_ref(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("tn_convergence: constant coefficients give zero deviation") {
  const auto built = model::builtin_model("langevin");
  const auto rows = mc::tn_convergence(built.spec, built.scheme, VectorXd::Ones(1), {50, 100}, 20,
                                       606, 8, 1);
  for (const auto& r : rows) CHECK(r.rms < 1e-10);
}

TEST_CASE("tn_convergence: state-dependent information decreases in n") {
  // additive shape: c = theta + eps sin(x), so gamma depends on the state
  const auto built = model::builtin_model("langevin", {{"shape", 3}, {"eps", 0.3}});
  const auto rows = mc::tn_convergence(built.spec, built.scheme, VectorXd::Ones(1),
                                       {100, 200, 400}, 120, 707, 8, 1);
  REQUIRE(rows.size() == 3);
  // RMS ~ C/sqrt(n): allow slack for Monte Carlo noise
  CHECK(rows[1].rms < rows[0].rms * 1.1);
  CHECK(rows[2].rms < rows[1].rms * 1.1);
}

TEST_CASE("2-parameter model: TSum symmetric PSD on every path") {
  const auto built = model::builtin_model("langevin", {{"kappa", 2}, {"diag", 1}});
  const VectorXd theta0 = (VectorXd(2) << 1.0, 1.5).finished();
  const VectorXd h = VectorXd::Ones(2);
  for (int s = 0; s < 30; ++s) {
    const auto path = sim::simulate_path(built.spec, theta0, 80, 4, rng::derive_seed(808, s));
    const auto obs = sim::observe(path, built.scheme, built.spec);
    const auto ex = score::expansion_complete(obs, built.spec, theta0, h);
    CHECK((ex.t_sum - ex.t_sum.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(ex.t_sum);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
  }
}
