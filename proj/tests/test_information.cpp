#include <doctest.h>

#include "lamn/information.hpp"
#include "lamn/simulate.hpp"

using namespace lamn;

TEST_CASE("gamma_complete: 4 for the scalar model, 0 when theta-free") {
  const auto built = model::builtin_model("langevin");
  const VectorXd theta = VectorXd::Ones(1);
  const auto path = sim::simulate_path(built.spec, theta, 40, 4, 2);
  const auto im = info::gamma_complete(path, built.spec, theta);
  CHECK(im.gamma(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(im.provenance == "path-quadrature");
  CHECK(info::check_pd(im).first);

  auto frozen = built;
  frozen.spec.a_tilde = [](const VectorXd&, const VectorXd&) {
    return MatrixXd(MatrixXd::Constant(1, 1, 1.0));
  };
  frozen.spec.da_dtheta = [](const VectorXd&, const VectorXd&, int) {
    return MatrixXd(MatrixXd::Zero(1, 1));
  };
  const auto zero = info::gamma_complete(path, frozen.spec, theta);
  CHECK(zero.gamma(0, 0) == doctest::Approx(0.0));
  const auto [flag, mn] = info::check_pd(zero);
  CHECK(!flag);
  CHECK(mn == doctest::Approx(0.0));
}

TEST_CASE("gamma_complete: Example 2.2 closed form 2(kappa + kappa')") {
  const auto built = model::builtin_model("langevin-partial-velocity", {{"kappa", 2}, {"kappa_prime", 1}});
  const VectorXd theta = VectorXd::Ones(1);
  const auto path = sim::simulate_path(built.spec, theta, 40, 4, 3);
  const auto im = info::gamma_complete(path, built.spec, theta);
  CHECK(im.gamma(0, 0) == doctest::Approx(6.0).epsilon(1e-10));
  const auto closed = info::gamma_closed_form("langevin-partial-velocity", path, built.spec, theta);
  CHECK(closed.gamma(0, 0) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("gamma_complete: shared-noise equals the Example 2.1 value") {
  const auto built = model::builtin_model("shared-noise");
  const VectorXd theta = VectorXd::Ones(1);
  const auto path = sim::simulate_path(built.spec, theta, 40, 4, 4);
  const auto im = info::gamma_complete(path, built.spec, theta);
  CHECK(im.gamma(0, 0) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("additivity: both trace terms are PSD and sum to Gamma") {
  const auto built = model::builtin_model("factor");
  const VectorXd theta = VectorXd::Constant(1, 0.9);
  const auto path = sim::simulate_path(built.spec, theta, 30, 4, 5);
  const auto [t1, t2] = info::gamma_complete_terms(path, built.spec, theta);
  Eigen::SelfAdjointEigenSolver<MatrixXd> e1(t1), e2(t2);
  CHECK(e1.eigenvalues().minCoeff() > -1e-10);
  CHECK(e2.eigenvalues().minCoeff() > -1e-10);
  const auto im = info::gamma_complete(path, built.spec, theta);
  CHECK((im.gamma - t1 - t2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gamma_partial: factor-of-two chain on one path") {
  const auto lang = model::builtin_model("langevin");
  const auto integ = model::builtin_model("integrated");
  const VectorXd theta = VectorXd::Ones(1);
  const auto path = sim::simulate_path(lang.spec, theta, 50, 4, 6);
  const double joint = info::gamma_complete(path, lang.spec, theta).gamma(0, 0);
  const double partial = info::gamma_closed_form("integrated", path, integ.spec, theta).gamma(0, 0);
  const auto [first_term, second_term] = info::gamma_complete_terms(path, lang.spec, theta);
  CHECK(std::abs(joint - 2.0 * partial) < 1e-9);
  CHECK(std::abs(joint - 2.0 * first_term(0, 0)) < 1e-9);
  CHECK(std::abs(first_term(0, 0) - second_term(0, 0)) < 1e-9);
}

TEST_CASE("gamma_partial: stochvol closed forms") {
  const VectorXd theta = VectorXd::Ones(1);
  {
    const auto sv = model::builtin_model("stochvol-common");
    const auto path = sim::simulate_path(sv.spec, theta, 30, 4, 7);
    const auto im = info::gamma_closed_form("stochvol-common", path, sv.spec, theta);
    CHECK(im.gamma(0, 0) == doctest::Approx(4.0).epsilon(1e-12));  // (1/2) * 8
  }
  {
    const auto sv = model::builtin_model("stochvol-diagonal");
    const auto path = sim::simulate_path(sv.spec, theta, 30, 4, 8);
    const auto im = info::gamma_closed_form("stochvol-diagonal", path, sv.spec, theta);
    CHECK(im.gamma(0, 0) == doctest::Approx(2.0).epsilon(1e-12));  // (1/2) * 4 / theta^2
  }
}

TEST_CASE("two-route agreement: psi-limit vs closed form, state-dependent model") {
  // additive shape gives a genuinely state-dependent g
  const auto built = model::builtin_model("integrated", {{"shape", 3}, {"eps", 0.3}});
  const auto frame = model::build_frame(built.scheme, built.spec.kappa);
  const VectorXd theta = VectorXd::Ones(1);
  const auto path = sim::simulate_path(built.spec, theta, 200, 8, 9);
  const auto closed = info::gamma_partial(
      path, built.spec,
      [&](const VectorXd& x) { return model::builtin_closed_form_g("integrated", built.spec, x, theta); },
      "closed-form");
  const auto psi_route = info::gamma_partial_psi_limit(path, built.spec, frame, theta, {100, 400});
  CHECK(psi_route.provenance == "psi-limit");
  const double rel = std::abs(psi_route.gamma(0, 0) - closed.gamma(0, 0)) / closed.gamma(0, 0);
  CHECK(rel < 0.02);
}

TEST_CASE("check_pd: rank-deficient redundant parametrization") {
  // f(theta) = exp(theta1 + theta2): Gamma is a rank-1 outer product
  auto built = model::builtin_model("factor");
  auto spec = built.spec;
  spec.d = 2;
  spec.theta_box.lo = VectorXd::Constant(2, 0.1);
  spec.theta_box.hi = VectorXd::Constant(2, 10.0);
  const MatrixXd lamv = built.spec.a_tilde(built.spec.rotated_initial(), VectorXd::Zero(1));
  spec.a_tilde = [lamv](const VectorXd&, const VectorXd& th) {
    return MatrixXd(std::exp(th(0) + th(1)) * lamv);
  };
  spec.da_dtheta = [lamv](const VectorXd&, const VectorXd& th, int) {
    return MatrixXd(std::exp(th(0) + th(1)) * lamv);
  };
  const VectorXd theta = VectorXd::Constant(2, 0.5);
  const auto path = sim::simulate_path(spec, theta, 20, 2, 10);
  const auto im = info::gamma_complete(path, spec, theta);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(im.gamma);
  CHECK(es.eigenvalues()(0) < 1e-10);   // rank 1
  CHECK(es.eigenvalues()(1) > 1.0);
  CHECK(!info::check_pd(im).first);
}

TEST_CASE("gamma_complete aborts when Psi loses rank") {
  auto built = model::builtin_model("langevin");
  built.spec.grad1_b_check = [](const VectorXd&) { return MatrixXd(MatrixXd::Zero(1, 1)); };
  const auto path = sim::simulate_path(built.spec, VectorXd::Ones(1), 10, 2, 6);
  CHECK_THROWS_AS(info::gamma_complete(path, built.spec, VectorXd::Ones(1)), NumericalError);
}

TEST_CASE("closed forms track the theta factor for scale parametrizations") {
  const double theta = 2.0;
  const VectorXd th = VectorXd::Constant(1, theta);
  {
    const auto built = model::builtin_model("scaled-factor");
    const auto path = sim::simulate_path(built.spec, th, 20, 2, 44);
    const auto im = info::gamma_closed_form("scaled-factor", path, built.spec, th);
    CHECK(im.gamma(0, 0) == doctest::Approx(2.0 * 3.0 / (theta * theta)).epsilon(1e-12));
  }
  {
    const auto built = model::builtin_model("langevin-partial-velocity", {{"fshape", 1}});
    const auto path = sim::simulate_path(built.spec, th, 20, 2, 45);
    const auto im =
        info::gamma_closed_form("langevin-partial-velocity", path, built.spec, th);
    CHECK(im.gamma(0, 0) == doctest::Approx(2.0 * 3.0 / (theta * theta)).epsilon(1e-12));
  }
}
