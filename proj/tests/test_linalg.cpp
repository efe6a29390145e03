#include <doctest.h>

#include <random>

#include "lamn/linalg.hpp"

using namespace lamn;
using linalg::pinv;

namespace {
MatrixXd randn(std::mt19937_64& eng, int r, int c) {
  std::normal_distribution<double> g;
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(eng);
  return m;
}
}  // namespace

TEST_CASE("pinv: diagonal with zero singular value") {
  MatrixXd a(2, 2);
  a << 2, 0, 0, 0;
  MatrixXd expect(2, 2);
  expect << 0.5, 0, 0, 0;
  CHECK((pinv(a) - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pinv: full row rank matches a^T (a a^T)^{-1}") {
  std::mt19937_64 eng(1);
  const MatrixXd a = randn(eng, 2, 4);
  const MatrixXd closed = a.transpose() * (a * a.transpose()).inverse();
  CHECK((pinv(a) - closed).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pinv: Penrose conditions on random rectangular matrices") {
  std::mt19937_64 eng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd a = randn(eng, 3, 5);
    const MatrixXd p = pinv(a);
    CHECK((a * p * a - a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((p * a * p - p).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(((a * p).transpose() - a * p).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(((p * a).transpose() - p * a).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK(pinv(MatrixXd::Zero(3, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel_basis spans the kernel") {
  MatrixXd a(1, 2);
  a << 1.0, 0.0;
  const MatrixXd k = linalg::kernel_basis(a);
  REQUIRE(k.cols() == 1);
  CHECK((a * k).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(linalg::kernel_basis(MatrixXd::Identity(3, 3)).cols() == 0);
}

TEST_CASE("orthonormal_row_span: projection columns in index order") {
  MatrixXd q = MatrixXd::Zero(3, 3);
  q(1, 1) = 1.0;
  const MatrixXd r = linalg::orthonormal_row_span(q);
  REQUIRE(r.rows() == 1);
  CHECK(std::abs(std::abs(r(0, 1)) - 1.0) < 1e-14);
  const MatrixXd ri = linalg::orthonormal_row_span(MatrixXd::Identity(4, 4));
  CHECK((ri - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("SymPd: solve, log_det, degradation flag") {
  std::mt19937_64 eng(3);
  const MatrixXd r = randn(eng, 4, 4);
  const MatrixXd a = r * r.transpose() + MatrixXd::Identity(4, 4);
  linalg::SymPd f(a);
  CHECK(!f.degraded());
  CHECK((f.inverse() * a - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(f.log_det() == doctest::Approx(std::log(a.determinant())).epsilon(1e-10));

  MatrixXd s = MatrixXd::Zero(2, 2);
  s(0, 0) = 1.0;
  linalg::SymPd fs(s);
  CHECK(fs.degraded());
  CHECK(fs.min_eig() == doctest::Approx(0.0));
}

TEST_CASE("pairwise_sum matches sequential sum") {
  std::vector<double> xs;
  for (int i = 1; i <= 1001; ++i) xs.push_back(1.0 / i);
  double seq = 0.0;
  for (double x : xs) seq += x;
  CHECK(linalg::pairwise_sum(xs) == doctest::Approx(seq).epsilon(1e-12));
}

TEST_CASE("kron small example") {
  MatrixXd a(2, 2), b(1, 2);
  a << 1, 2, 3, 4;
  b << 5, 6;
  const MatrixXd k = linalg::kron(a, b);
  REQUIRE(k.rows() == 2);
  REQUIRE(k.cols() == 4);
  CHECK(k(0, 0) == 5);
  CHECK(k(0, 2) == 10);
  CHECK(k(1, 3) == 24);
}
