#include <doctest.h>

#include <random>

#include "lamn/model.hpp"

using namespace lamn;
using namespace lamn::model;

namespace {

std::vector<std::pair<VectorXd, VectorXd>> random_probes(const ModelSpec& spec, int count,
                                                         unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g;
  std::vector<std::pair<VectorXd, VectorXd>> probes;
  for (int i = 0; i < count; ++i) {
    VectorXd z = spec.rotated_initial();
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) += 0.5 * g(eng);
    VectorXd theta(spec.d);
    for (int k = 0; k < spec.d; ++k) {
      std::uniform_real_distribution<double> u(spec.theta_box.lo(k) + 0.05,
                                               spec.theta_box.hi(k) - 0.05);
      theta(k) = u(eng);
    }
    probes.emplace_back(z, theta);
  }
  return probes;
}

}  // namespace

TEST_CASE("builtin langevin matches Example 2.1 shape") {
  const auto built = builtin_model("langevin");
  CHECK(built.spec.m == 2);
  CHECK(built.spec.kappa == 1);
  CHECK((built.spec.U - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  const VectorXd z = built.spec.rotated_initial();
  // b_check(z) = x
  CHECK(built.spec.b_check(z)(0) == z(0));
  CHECK(built.scheme.kind == SchemeKind::Complete);
}

TEST_CASE("builtin integrated uses Q = O, B = I") {
  const auto built = builtin_model("integrated");
  CHECK(built.scheme.kind == SchemeKind::Partial);
  CHECK(built.scheme.Q.cwiseAbs().maxCoeff() == 0.0);
  CHECK((built.scheme.B - MatrixXd::Identity(1, 1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(built.scheme.q1 == 0);
  CHECK(built.scheme.q2 == 1);
}

TEST_CASE("unknown builtin and bad params are rejected") {
  CHECK_THROWS_AS(builtin_model("brownian-sheet"), ConfigError);
  CHECK_THROWS_AS(builtin_model("langevin", {{"shape", 1}, {"eps", 1.5}}), ConfigError);
  CHECK_THROWS_AS(builtin_model("stochvol-diagonal", {{"c22", -1.0}}), ConfigError);
}

TEST_CASE("every builtin passes validate_conditions at 100 random probes") {
  for (const auto& name : builtin_names()) {
    const auto built = builtin_model(name);
    const auto report = validate_conditions(built.spec, built.scheme, random_probes(built.spec, 100, 7));
    INFO(name, " worst residual ", report.worst);
    CHECK(report.pass);
  }
}

TEST_CASE("validate_conditions flags a kernel mismatch") {
  // kappa = 1, r = 2: a = (theta, 0) has kernel e2, but da/dtheta = (1, 1)
  ModelSpec s;
  s.name = "broken";
  s.m = 2;
  s.kappa = 1;
  s.r = 2;
  s.d = 1;
  s.theta_box.lo = VectorXd::Constant(1, 0.1);
  s.theta_box.hi = VectorXd::Constant(1, 10.0);
  s.U = MatrixXd::Identity(2, 2);
  s.z_ini = (VectorXd(2) << 1.0, 0.0).finished();
  s.a_tilde = [](const VectorXd&, const VectorXd& th) {
    return MatrixXd((MatrixXd(1, 2) << th(0), 0.0).finished());
  };
  s.da_dtheta = [](const VectorXd&, const VectorXd&, int) {
    return MatrixXd((MatrixXd(1, 2) << 1.0, 1.0).finished());
  };
  s.b_tilde = [](const VectorXd&, const VectorXd&) { return VectorXd(VectorXd::Zero(1)); };
  s.b_check = [](const VectorXd& z) { return VectorXd(VectorXd::Constant(1, z(0))); };
  s.grad1_b_check = [](const VectorXd&) { return MatrixXd(MatrixXd::Identity(1, 1)); };

  const auto report = validate_conditions(s, SchemeSpec::complete(),
                                          {{s.rotated_initial(), VectorXd::Constant(1, 1.0)}});
  CHECK(!report.pass);
  // the kernel vector e2 is mapped to (1,1) e2-component = 1
  CHECK(report.probes[0].ker_a_residual > 1e-3);
}

TEST_CASE("theta_derivative: linear, exponential, constant coefficients") {
  const auto lang = builtin_model("langevin");
  const VectorXd z = lang.spec.rotated_initial();
  // c(x, theta) = theta: derivative exactly 1 (analytic callback)
  CHECK(theta_derivative(lang.spec, "a_tilde", z, VectorXd::Constant(1, 2.0), 0)(0, 0) == 1.0);

  // finite-difference fallback on exp(theta) at theta = 1 (box excludes 0)
  ModelSpec s = lang.spec;
  s.da_dtheta = nullptr;
  s.a_tilde = [](const VectorXd&, const VectorXd& th) {
    return MatrixXd(MatrixXd::Constant(1, 1, std::exp(th(0))));
  };
  const double d = theta_derivative(s, "a_tilde", z, VectorXd::Constant(1, 1.0), 0)(0, 0);
  CHECK(d == doctest::Approx(std::exp(1.0)).epsilon(1e-10));

  // theta-free coefficient: zero matrix
  s.a_tilde = [](const VectorXd&, const VectorXd&) { return MatrixXd(MatrixXd::Constant(1, 1, 3.0)); };
  CHECK(theta_derivative(s, "a_tilde", z, VectorXd::Constant(1, 1.0), 0)(0, 0) == doctest::Approx(0.0));

  // stepping over the box boundary is an error
  CHECK_THROWS_AS(theta_derivative(s, "a_tilde", z, VectorXd::Constant(1, 0.1), 0), ConfigError);
}

TEST_CASE("finite differences agree with the analytic theta derivatives") {
  for (const auto& name : builtin_names()) {
    const auto built = builtin_model(name);
    REQUIRE(bool(built.spec.da_dtheta));
    ModelSpec fd = built.spec;
    fd.da_dtheta = nullptr;
    for (const auto& [z, theta] : random_probes(built.spec, 10, 17)) {
      for (int i = 0; i < built.spec.d; ++i) {
        const MatrixXd an = theta_derivative(built.spec, "a_tilde", z, theta, i);
        const MatrixXd nm = theta_derivative(fd, "a_tilde", z, theta, i);
        const double scale = std::max(1.0, an.cwiseAbs().maxCoeff());
        CHECK((an - nm).cwiseAbs().maxCoeff() / scale < 1e-6);
      }
    }
  }
}

TEST_CASE("ProjectionFrame is deterministic and satisfies Qt3 B^+ B = Qt3") {
  const auto sv = builtin_model("stochvol-common");
  const auto f1 = build_frame(sv.scheme, sv.spec.kappa);
  const auto f2 = build_frame(sv.scheme, sv.spec.kappa);
  CHECK((f1.Qt1 - f2.Qt1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1.Qt3 - f2.Qt3).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1.Qt3 * f1.Bpinv * sv.scheme.B - f1.Qt3).cwiseAbs().maxCoeff() < 1e-10);
  // rows orthonormal
  CHECK((f1.Qt1 * f1.Qt1.transpose() - MatrixXd::Identity(f1.q1, f1.q1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("SchemeSpec rejects a non-projection Q and Ker(B) outside Im(Q)") {
  MatrixXd q(2, 2);
  q << 1.0, 0.3, 0.3, 0.0;  // symmetric but not idempotent
  MatrixXd b(1, 2);
  b << 0.0, 1.0;
  CHECK_THROWS_AS(SchemeSpec::partial(q, b), ConfigError);

  // Q = 0 means Im(Q) = {0}: a rank-deficient B kernel cannot fit inside
  MatrixXd q0 = MatrixXd::Zero(2, 2);
  MatrixXd brow(1, 2);
  brow << 1.0, 0.0;
  CHECK_THROWS_AS(SchemeSpec::partial(q0, brow), ConfigError);
}

TEST_CASE("factor rotation: U a = (a_tilde; 0) and positivity") {
  const auto fac = builtin_model("factor");
  const VectorXd theta = VectorXd::Constant(1, 0.7);
  const VectorXd z = fac.spec.rotated_initial();
  const MatrixXd at = fac.spec.a_tilde(z, theta);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(at * at.transpose());
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(fac.spec.m == 3);
  CHECK(fac.spec.kappa == 2);
}
