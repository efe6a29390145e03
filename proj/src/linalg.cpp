#include "lamn/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <iostream>

namespace lamn::linalg {

MatrixXd pinv(const MatrixXd& a) {
  if (a.size() == 0) return MatrixXd(a.cols(), a.rows());
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = sv.size() > 0 ? sv(0) * static_cast<double>(std::max(a.rows(), a.cols())) * 1e-14 : 0.0;
  VectorXd inv = VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

MatrixXd kernel_basis(const MatrixXd& a, double rtol) {
  if (a.size() == 0) return MatrixXd(a.cols(), 0);
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double tol = smax * rtol;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  const Eigen::Index dim = a.cols() - rank;
  return svd.matrixV().rightCols(dim);
}

MatrixXd orthonormal_row_span(const MatrixXd& p, double tol) {
  std::vector<VectorXd> basis;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    VectorXd v = p.col(j);
    for (const auto& b : basis) v -= b.dot(v) * b;
    // re-orthogonalize once for stability
    for (const auto& b : basis) v -= b.dot(v) * b;
    const double nrm = v.norm();
    if (nrm > tol) basis.push_back(v / nrm);
  }
  MatrixXd rows(static_cast<Eigen::Index>(basis.size()), p.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) rows.row(i) = basis[static_cast<size_t>(i)].transpose();
  return rows;
}

SymPd::SymPd(MatrixXd a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw ConfigError("SymPd: matrix not square");
  if (!a_.allFinite()) throw NumericalError("SymPd: matrix has non-finite entries");
  llt_.compute(a_);
  pd_ = (llt_.info() == Eigen::Success) && (llt_.matrixLLT().diagonal().minCoeff() > 0.0);
}

void SymPd::ensure_eig() const {
  if (have_eig_) return;
  eig_.compute(a_);
  const VectorXd& ev = eig_.eigenvalues();
  const double floor = 1e-12 * std::max(ev.maxCoeff(), 0.0);
  if (floor <= 0.0) throw NumericalError("SymPd: matrix has no positive spectrum");
  clamped_ = ev.cwiseMax(floor);
  have_eig_ = true;
}

MatrixXd SymPd::solve(const MatrixXd& rhs) const {
  if (pd_) return llt_.solve(rhs);
  ensure_eig();
  if (!warned_) {
    std::cerr << "warning: covariance factorization failed; clamped eigenvalues in use\n";
    warned_ = true;
  }
  return eig_.eigenvectors() * clamped_.cwiseInverse().asDiagonal() *
         (eig_.eigenvectors().transpose() * rhs);
}

MatrixXd SymPd::inverse() const { return solve(MatrixXd(MatrixXd::Identity(a_.rows(), a_.cols()))); }

double SymPd::log_det() const {
  if (pd_) return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  ensure_eig();
  return clamped_.array().log().sum();
}

double SymPd::min_eig() const {
  ensure_eig();
  return eig_.eigenvalues().minCoeff();
}

double SymPd::max_eig() const {
  ensure_eig();
  return eig_.eigenvalues().maxCoeff();
}

double SymPd::cond() const {
  ensure_eig();
  const double mn = eig_.eigenvalues().minCoeff();
  return mn > 0.0 ? eig_.eigenvalues().maxCoeff() / mn : std::numeric_limits<double>::infinity();
}

namespace {
template <typename T>
T pairwise_impl(std::vector<T>& xs, size_t lo, size_t hi) {
  if (hi - lo == 1) return xs[lo];
  const size_t mid = lo + (hi - lo) / 2;
  return pairwise_impl(xs, lo, mid) + pairwise_impl(xs, mid, hi);
}
}  // namespace

double pairwise_sum(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  return pairwise_impl(xs, 0, xs.size());
}

VectorXd pairwise_sum(std::vector<VectorXd> xs) {
  if (xs.empty()) return VectorXd();
  return pairwise_impl(xs, 0, xs.size());
}

MatrixXd pairwise_sum(std::vector<MatrixXd> xs) {
  if (xs.empty()) return MatrixXd();
  return pairwise_impl(xs, 0, xs.size());
}

double rel_diff(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, a.norm());
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

bool all_finite(const MatrixXd& a) { return a.allFinite(); }

}  // namespace lamn::linalg
