#include <doctest.h>

#include <random>

#include "lamn/blockcov.hpp"
#include "lamn/linalg.hpp"

using namespace lamn;
using namespace lamn::blockcov;

namespace {

MatrixXd random_spd(std::mt19937_64& eng, int n) {
  std::normal_distribution<double> g;
  MatrixXd r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = g(eng);
  return r * r.transpose() + 0.3 * MatrixXd::Identity(n, n);
}

model::ProjectionFrame integrated_frame(int kappa) {
  const auto scheme =
      model::SchemeSpec::partial(MatrixXd::Zero(kappa, kappa), MatrixXd::Identity(kappa, kappa));
  return model::build_frame(scheme, kappa);
}

}  // namespace

TEST_CASE("ktilde: scalar example and hand-inverted 2x2") {
  const auto kt = ktilde_from_parts(MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1));
  MatrixXd expect(2, 2);
  expect << 1.0, 0.5, 0.5, 1.0 / 3.0;
  CHECK((kt.dense - expect).cwiseAbs().maxCoeff() < 1e-15);
  MatrixXd inv(2, 2);
  inv << 4.0, -6.0, -6.0, 12.0;
  CHECK((kt.inverse - inv).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(kt.S(0, 0) == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("ktilde: scaling homogeneity sigma^2") {
  const double sigma = 1.7;
  const auto kt1 = ktilde_from_parts(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
  const auto kts = ktilde_from_parts(sigma * sigma * MatrixXd::Identity(2, 2),
                                     MatrixXd::Identity(2, 2));
  CHECK((kts.dense - sigma * sigma * kt1.dense).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ktilde: Schur determinant identity on random inputs") {
  std::mt19937_64 eng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd aat = random_spd(eng, 3);
    MatrixXd g(3, 2);
    std::normal_distribution<double> gg;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) g(i, j) = gg(eng);
    const auto kt = ktilde_from_parts(aat, g);
    const double det_dense = kt.dense.determinant();
    const double det_prod = aat.determinant() * kt.S.determinant();
    CHECK(std::abs(det_dense - det_prod) / std::abs(det_prod) < 1e-9);
  }
}

TEST_CASE("ktilde rejects rank-deficient grad1 b_check") {
  MatrixXd g = MatrixXd::Zero(2, 1);  // kernel not trivial
  CHECK_THROWS_AS(ktilde_from_parts(MatrixXd::Identity(2, 2), g), NumericalError);
}

TEST_CASE("v_matrix: L = 1, L = 2, positivity up to L = 500") {
  MatrixXd v1(2, 2);
  v1 << 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0;
  CHECK((v_matrix(1) - v1).cwiseAbs().maxCoeff() < 1e-15);
  MatrixXd v2(3, 3);
  v2 << 1.0 / 3.0, 1.0 / 6.0, 0.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 0.0, 1.0 / 6.0, 1.0 / 3.0;
  CHECK((v_matrix(2) - v2).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(v_matrix(500));
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("psi: Kronecker identity for the integrated frame") {
  std::mt19937_64 eng(6);
  const auto frame = integrated_frame(2);
  for (int L : {3, 20, 100}) {
    const MatrixXd a = random_spd(eng, 2);
    const MatrixXd psi = psi_build(a, frame, 2, 2, L).dense;
    CHECK((psi - linalg::kron(v_matrix(L), a)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("psi: symmetry and linearity in A") {
  std::mt19937_64 eng(7);
  const auto sv = model::builtin_model("stochvol-common");
  const auto frame = model::build_frame(sv.scheme, sv.spec.kappa);
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixXd a = random_spd(eng, 2);
    const MatrixXd b = random_spd(eng, 2);
    for (int k : {1, 2}) {
      const MatrixXd pa = psi_build(a, frame, k, k, 5).dense;
      CHECK((pa - pa.transpose()).cwiseAbs().maxCoeff() < 1e-14);
      const MatrixXd pb = psi_build(b, frame, k, k, 5).dense;
      const MatrixXd pab = psi_build(a + b, frame, k, k, 5).dense;
      CHECK((pab - pa - pb).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("psi: 1,1 block is the leading principal block of 1,2 and 2,2") {
  std::mt19937_64 eng(8);
  const auto sv = model::builtin_model("stochvol-diagonal");
  const auto frame = model::build_frame(sv.scheme, sv.spec.kappa);
  const MatrixXd a = random_spd(eng, 2);
  const int L = 6;
  const MatrixXd p11 = psi_build(a, frame, 1, 1, L).dense;
  const MatrixXd p12 = psi_build(a, frame, 1, 2, L).dense;
  const MatrixXd p22 = psi_build(a, frame, 2, 2, L).dense;
  CHECK((p12.leftCols(p11.cols()) - p11).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p22.topRows(p12.rows()) - p12).cwiseAbs().maxCoeff() == 0.0);
  const MatrixXd p21 = psi_build(a, frame, 2, 1, L).dense;
  CHECK((p21 - p12.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psi: stochvol-diagonal permutes to blockdiag(M11 I_L, M22 V_L)") {
  const auto sv = model::builtin_model("stochvol-diagonal");
  const auto frame = model::build_frame(sv.scheme, sv.spec.kappa);
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 0) = 2.3;
  m(1, 1) = 0.7;
  const int L = 5;
  const MatrixXd psi = psi_build(m, frame, 2, 2, L).dense;  // size 2L+1
  // rows per slot: (Qt1 -> x1, Qt2 -> x2), tail Qt3 -> x2
  std::vector<int> perm;
  for (int s = 0; s < L; ++s) perm.push_back(2 * s);              // x1 slots
  for (int s = 0; s < L; ++s) perm.push_back(2 * s + 1);          // x2 slots
  perm.push_back(2 * L);                                          // tail
  MatrixXd p = MatrixXd::Zero(2 * L + 1, 2 * L + 1);
  for (int i = 0; i < 2 * L + 1; ++i) p(i, perm[static_cast<size_t>(i)]) = 1.0;
  const MatrixXd rearranged = p * psi * p.transpose();
  MatrixXd expect = MatrixXd::Zero(2 * L + 1, 2 * L + 1);
  expect.topLeftCorner(L, L) = m(0, 0) * MatrixXd::Identity(L, L);
  expect.bottomRightCorner(L + 1, L + 1) = m(1, 1) * v_matrix(L);
  CHECK((rearranged - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("psi_observed: integrated frame gives the uniform second-difference matrix") {
  const auto frame = integrated_frame(1);
  const MatrixXd a = MatrixXd::Constant(1, 1, 1.0);
  const int L = 5;
  const MatrixXd psi = psi_observed(a, frame, L, false);
  for (int i = 0; i < L; ++i) CHECK(psi(i, i) == doctest::Approx(2.0 / 3.0));
  // first block keeps the exact-initial-value corner
  const MatrixXd psi0 = psi_observed(a, frame, L, true);
  CHECK(psi0(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK((psi0 - psi_build(a, frame, 1, 1, L).dense).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psi_build rejects L < 3") {
  const auto frame = integrated_frame(1);
  CHECK_THROWS_AS(psi_build(MatrixXd::Identity(1, 1), frame, 1, 1, 2), ConfigError);
}

TEST_CASE("schur_quadratic: B = 0 decouples") {
  std::mt19937_64 eng(9);
  const MatrixXd a1 = random_spd(eng, 3);
  const MatrixXd a2 = random_spd(eng, 3);
  const MatrixXd c = random_spd(eng, 2);
  const auto out = schur_quadratic(a1, a2, MatrixXd::Zero(3, 2), c);
  const MatrixXd expect = (a1.inverse() * a2) * (a1.inverse() * a2);
  CHECK((out.left - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(out.discrepancy < 1e-10);
}

TEST_CASE("t_trace: scalar integrated model gives 4 L / theta^2 patterns") {
  const auto built = model::builtin_model("integrated");
  const auto frame = model::build_frame(built.scheme, built.spec.kappa);
  const VectorXd x = VectorXd::Ones(1);
  for (double theta : {1.0, 1.6}) {
    const VectorXd th = VectorXd::Constant(1, theta);
    const int L = 40;
    const double t11 = t_trace(x, th, 1, 1, L, built.spec, frame)(0, 0);
    const double t12 = t_trace(x, th, 1, 2, L, built.spec, frame)(0, 0);
    const double t22 = t_trace(x, th, 2, 2, L, built.spec, frame)(0, 0);
    CHECK(t11 == doctest::Approx(4.0 * L / (theta * theta)).epsilon(1e-10));
    CHECK(t12 == doctest::Approx(4.0 * L / (theta * theta)).epsilon(1e-10));
    CHECK(t22 == doctest::Approx(4.0 * (L + 1) / (theta * theta)).epsilon(1e-10));
  }
}

TEST_CASE("t_trace: theta-free coefficient gives zero; d = 2 symmetry") {
  // theta-free: fix the builtin's derivative to zero
  auto built = model::builtin_model("integrated");
  built.spec.a_tilde = [](const VectorXd&, const VectorXd&) {
    return MatrixXd(MatrixXd::Constant(1, 1, 1.3));
  };
  built.spec.da_dtheta = [](const VectorXd&, const VectorXd&, int) {
    return MatrixXd(MatrixXd::Zero(1, 1));
  };
  const auto frame = model::build_frame(built.scheme, built.spec.kappa);
  const double t = t_trace(VectorXd::Ones(1), VectorXd::Ones(1), 1, 1, 10, built.spec, frame)(0, 0);
  CHECK(t == doctest::Approx(0.0));

  // two-parameter diagonal integrated model: T_{1,1} symmetric
  const auto diag = model::builtin_model("integrated", {{"kappa", 2}, {"diag", 1}});
  const auto dframe = model::build_frame(diag.scheme, diag.spec.kappa);
  const VectorXd th2 = (VectorXd(2) << 1.0, 1.7).finished();
  const MatrixXd t11 = t_trace(VectorXd::Ones(2), th2, 1, 1, 12, diag.spec, dframe);
  CHECK((t11 - t11.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("g_limit: integrated 4/theta^2, stochvol-common 8, stochvol-diagonal 4/theta^2") {
  {
    const auto built = model::builtin_model("integrated");
    const auto frame = model::build_frame(built.scheme, built.spec.kappa);
    const auto out = g_limit(VectorXd::Ones(1), VectorXd::Ones(1), built.spec, frame,
                             {100, 200, 400}, 0.02);
    CHECK(out.converged);
    CHECK(std::abs(out.g(0, 0) - 4.0) < 0.04);  // within 1% at L = 400
  }
  {
    const auto built = model::builtin_model("stochvol-common");
    const auto frame = model::build_frame(built.scheme, built.spec.kappa);
    const auto out = g_limit((VectorXd(2) << 1.0, 1.0).finished(), VectorXd::Ones(1), built.spec,
                             frame, {50, 100}, 0.05);
    CHECK(out.g(0, 0) == doctest::Approx(8.0).epsilon(0.02));
  }
  {
    const auto built = model::builtin_model("stochvol-diagonal");
    const auto frame = model::build_frame(built.scheme, built.spec.kappa);
    const double theta = 1.4;
    const auto out = g_limit((VectorXd(2) << 1.0, 1.0).finished(), VectorXd::Constant(1, theta),
                             built.spec, frame, {50, 100}, 0.05);
    CHECK(out.g(0, 0) == doctest::Approx(4.0 / (theta * theta)).epsilon(0.02));
  }
}

TEST_CASE("t_trace rejects an ill-conditioned psi") {
  auto built = model::builtin_model("stochvol-diagonal");
  built.spec.a_tilde = [](const VectorXd&, const VectorXd& th) {
    MatrixXd a = MatrixXd::Zero(2, 2);
    a(0, 0) = th(0);
    a(1, 1) = 1e-9;  // condition number blows past 1e12
    return a;
  };
  const auto frame = model::build_frame(built.scheme, built.spec.kappa);
  CHECK_THROWS_AS(
      t_trace((VectorXd(2) << 1.0, 1.0).finished(), VectorXd::Ones(1), 1, 1, 10, built.spec, frame),
      NumericalError);
}
