#pragma once

#include <vector>

#include "lamn/common.hpp"
#include "lamn/model.hpp"

namespace lamn::blockcov {

/// Small-time Gaussian covariance of one normalized increment:
///   K = [ aa^T        (1/2) aa^T G ;
///         (1/2) G^T aa^T   (1/3) G^T aa^T G ]   with G = grad1 b_check,
/// S = (1/12) G^T aa^T G, and the explicit blockwise inverse.
struct KTilde {
  int kappa = 0;
  int q2 = 0;
  MatrixXd aat;      // kappa x kappa
  MatrixXd grad1;    // kappa x q2
  MatrixXd dense;    // m x m
  MatrixXd inverse;  // m x m, blockwise formula
  MatrixXd S;        // q2 x q2
  double log_det = 0.0;
};

KTilde ktilde_build(const model::ModelSpec& spec, const VectorXd& z0, const VectorXd& theta);

/// Same covariance built directly from aa^T and grad1 b_check.
KTilde ktilde_from_parts(const MatrixXd& aat, const MatrixXd& grad1);

/// Moore-Penrose pseudo-inverse (delegates to linalg::pinv).
MatrixXd pinv(const MatrixXd& a);

/// (L+1) x (L+1) second-difference covariance: diagonal 2/3 (1/3 at both
/// corners), off-diagonal 1/6.
MatrixXd v_matrix(int L);

/// psi_L^{k,l}(A) of the partial-observation scheme.
struct PsiMatrix {
  int k = 1, l = 1, L = 0;
  MatrixXd base;   // the kappa x kappa argument A
  MatrixXd dense;  // Lq + (kappa-q1)(k-1) by Lq + (kappa-q1)(l-1)
};

PsiMatrix psi_build(const MatrixXd& A, const model::ProjectionFrame& frame, int k, int l, int L);

/// Covariance of the observable block vector X'_j (boundary-corrected):
/// psi_L^{1,1}(A) plus (1/3) B(I-Q) A (I-Q)^T B^T in the first slot's
/// Ycheck block. For j = 0 the reconstruction is exact and the plain
/// psi^{1,1} applies (first_block = true).
MatrixXd psi_observed(const MatrixXd& A, const model::ProjectionFrame& frame, int L,
                      bool first_block = false);

struct SchurQuadratic {
  MatrixXd left;
  MatrixXd right;
  double discrepancy = 0.0;
};

/// Evaluates both sides of the partitioned-matrix identity
///   A1^{-1} (A2 B) [A1 B; B^T C]^{-1} (A2; B^T)
///   = (A1^{-1}A2)^2 + A1^{-1}(A2 A1^{-1} - I) B (C - B^T A1^{-1} B)^{-1} B^T (A1^{-1}A2 - I).
SchurQuadratic schur_quadratic(const MatrixXd& A1, const MatrixXd& A2, const MatrixXd& B,
                               const MatrixXd& C);

/// T_{k,l,L}(x): d x d matrix of traces
///   tr( d_i(psi^{k,k}(aa^T)^{-1}) psi^{k,l}(aa^T) d_j(psi^{l,l}(aa^T)^{-1}) psi^{l,k}(aa^T) ),
/// with d(psi^{-1}) = -psi^{-1} psi(dA) psi^{-1} (exact, psi is linear in A).
MatrixXd t_trace(const VectorXd& x, const VectorXd& theta0, int k, int l, int L,
                 const model::ModelSpec& spec, const model::ProjectionFrame& frame);

struct GLimit {
  MatrixXd g;                       // Richardson extrapolation of T/L
  bool converged = true;            // residuals decreasing and (k,l) agreement within tol
  double max_kl_disagreement = 0.0;
  std::vector<int> L_grid;
  std::vector<double> residuals;    // max over (k,l) of |T/L - g| per L
};

/// Information-density limit: extrapolates L^{-1} T_{k,l,L} -> g(x) over
/// the L grid and checks that all four (k,l) combinations agree within tol.
GLimit g_limit(const VectorXd& x, const VectorXd& theta0, const model::ModelSpec& spec,
               const model::ProjectionFrame& frame, const std::vector<int>& L_grid, double tol);

}  // namespace lamn::blockcov
