#pragma once

#include <utility>
#include <vector>

#include "lamn/common.hpp"

namespace lamn::linalg {

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// sigma_max * max(rows, cols) * 1e-14 are treated as zero.
MatrixXd pinv(const MatrixXd& a);

/// Columns form an orthonormal basis of Ker(a); empty (cols x 0) matrix
/// when the kernel is trivial. Relative singular-value tolerance
/// 1e-10 * sigma_max.
MatrixXd kernel_basis(const MatrixXd& a, double rtol = 1e-10);

/// Orthonormal rows spanning the column space of p, obtained by modified
/// Gram-Schmidt over the columns of p in index order. Deterministic.
MatrixXd orthonormal_row_span(const MatrixXd& p, double tol = 1e-10);

/// Symmetric positive-definite solver. Cholesky when it succeeds; an
/// eigenvalue-clamping fallback (clamp at 1e-12 * lambda_max) otherwise.
/// The eigendecomposition is computed lazily, so PD fast paths stay cheap.
class SymPd {
 public:
  explicit SymPd(MatrixXd a);

  MatrixXd solve(const MatrixXd& rhs) const;
  MatrixXd inverse() const;
  double log_det() const;
  double min_eig() const;
  double max_eig() const;
  double cond() const;
  /// True when Cholesky failed and the clamped fallback is in use.
  bool degraded() const { return !pd_; }

 private:
  void ensure_eig() const;

  MatrixXd a_;
  Eigen::LLT<MatrixXd> llt_;
  bool pd_ = false;
  mutable bool have_eig_ = false;
  mutable bool warned_ = false;
  mutable Eigen::SelfAdjointEigenSolver<MatrixXd> eig_;
  mutable VectorXd clamped_;
};

/// Deterministic pairwise (binary-tree) reduction; order independent of
/// any threading of the producer.
double pairwise_sum(std::vector<double> xs);
VectorXd pairwise_sum(std::vector<VectorXd> xs);
MatrixXd pairwise_sum(std::vector<MatrixXd> xs);

/// Frobenius-relative difference ||a-b|| / max(1, ||a||).
double rel_diff(const MatrixXd& a, const MatrixXd& b);

/// Kronecker product a (x) b.
MatrixXd kron(const MatrixXd& a, const MatrixXd& b);

bool all_finite(const MatrixXd& a);

}  // namespace lamn::linalg
