#pragma once

#include <functional>
#include <string>

#include "lamn/blockcov.hpp"
#include "lamn/common.hpp"
#include "lamn/model.hpp"
#include "lamn/simulate.hpp"

namespace lamn::info {

struct InfoMatrix {
  MatrixXd gamma;          // d x d symmetric
  std::string provenance;  // closed-form | path-quadrature | psi-limit
  double min_eig = 0.0;
};

/// Asymptotic information for complete observations: left-endpoint
/// quadrature along the fine grid of
///   (1/2) tr((aa^T)^+ d_i(aa^T) (aa^T)^+ d_j(aa^T)) + (1/2) tr(Psi^{-1} d_i Psi Psi^{-1} d_j Psi)
/// with Psi = (grad1 b_check)^T aa^T grad1 b_check.
InfoMatrix gamma_complete(const sim::PathSample& path, const model::ModelSpec& spec,
                          const VectorXd& theta0);

/// The two terms of gamma_complete separately (each PSD).
std::pair<MatrixXd, MatrixXd> gamma_complete_terms(const sim::PathSample& path,
                                                   const model::ModelSpec& spec,
                                                   const VectorXd& theta0);

using GFunction = std::function<MatrixXd(const VectorXd& x)>;

/// Gamma' = (1/2) quadrature of g along the Ytilde component of the path.
InfoMatrix gamma_partial(const sim::PathSample& path, const model::ModelSpec& spec,
                         const GFunction& g, const std::string& provenance = "closed-form");

/// Gamma' with g obtained from the psi-limit (Richardson over L_grid).
/// For kappa = 1 the limit is evaluated on a 64-point state grid spanning
/// the path range and linearly interpolated; otherwise it is evaluated at
/// 64 equally spaced path times.
InfoMatrix gamma_partial_psi_limit(const sim::PathSample& path, const model::ModelSpec& spec,
                                   const model::ProjectionFrame& frame, const VectorXd& theta0,
                                   const std::vector<int>& L_grid);

/// Closed-form information of a builtin's worked example on this path.
InfoMatrix gamma_closed_form(const std::string& model_name, const sim::PathSample& path,
                             const model::ModelSpec& spec, const VectorXd& theta0);

/// Positive-definiteness check via symmetric eigensolve.
std::pair<bool, double> check_pd(const InfoMatrix& gamma);

}  // namespace lamn::info
