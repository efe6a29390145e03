#pragma once

#include <cstdint>

#include "lamn/common.hpp"
#include "lamn/model.hpp"
#include "lamn/simulate.hpp"

namespace lamn::qmle {

/// Gaussian-block quasi negative log-likelihood (up to constants).
/// Complete: sum_j [ log det K(z_{j-1}, theta) + X_j^T K^{-1} X_j ] over
/// normalized increments. Partial: the same over observable blocks with
/// the boundary-corrected block covariance, remainder block dropped.
double quasi_nll(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                 const model::SchemeSpec& scheme, const VectorXd& theta, int e_n = 0);

/// Analytic gradient: d_i quasi_nll = -2 sum_j L_{j,i}.
VectorXd quasi_nll_gradient(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                            const model::SchemeSpec& scheme, const VectorXd& theta, int e_n = 0);

struct EstimateOptions {
  int max_iter = 500;
  double tol = 1e-8;
  int e_n = 0;  // partial schemes; 0 = default_e_n(n)
};

struct EstimateReport {
  VectorXd theta_hat;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// d = 1: golden-section over theta_box refined by three Newton steps on
/// the analytic score. d >= 2: Nelder-Mead with box clamping.
EstimateReport estimate(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                        const model::SchemeSpec& scheme, const VectorXd& theta_init,
                        const EstimateOptions& options = {});

struct StudyReport {
  int M = 0;
  int n = 0;
  int failures = 0;
  MatrixXd theta_hats;         // M x d
  VectorXd mean_theta;         // d
  MatrixXd scaled_cov;         // covariance of sqrt(n) (theta_hat - theta0)
  MatrixXd reference_inverse;  // Gamma^{-1} or Gamma'^{-1} averaged over paths
};

/// Repeats simulate -> observe -> estimate M times with derived seeds and
/// compares the empirical covariance of sqrt(n)(theta_hat - theta0) with
/// the inverse information. Aborts if more than 1% of replications fail.
StudyReport estimator_study(const model::ModelSpec& spec, const model::SchemeSpec& scheme,
                            const VectorXd& theta0, int n, int M, std::uint64_t seed,
                            int substeps = 16, int e_n = 0, int threads = 0);

}  // namespace lamn::qmle
