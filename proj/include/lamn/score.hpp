#pragma once

#include <vector>

#include "lamn/blockcov.hpp"
#include "lamn/common.hpp"
#include "lamn/model.hpp"
#include "lamn/simulate.hpp"

namespace lamn::score {

/// Per-parameter block matrices B_i = diag(Btilde_i, C_i) with
/// Btilde_i = d_i a . a^+ and C_i = G^T d_i a . a^+ G (G^T G)^{-1},
/// G = grad1 b_check. Satisfies d_i K = B_i K + K B_i^T.
struct BFamily {
  std::vector<MatrixXd> B;      // each m x m
  std::vector<double> trace;    // tr(B_i)
  VectorXd z0;
  VectorXd theta;
};

BFamily b_family(const model::ModelSpec& spec, const VectorXd& z0, const VectorXd& theta);

/// Quadratic-form score L_i(u) = u^T B_i^T K^{-1} u - tr(B_i).
double lstat(const VectorXd& u, const VectorXd& z0, const VectorXd& theta,
             const model::ModelSpec& spec, int i);

/// Conditional variance gamma = ( 2 tr(Phi_i K Phi_j K) )_{ij} with
/// Phi_i = (B_i^T K^{-1} + K^{-1} B_i)/2.
MatrixXd gamma_block(const VectorXd& z0, const VectorXd& theta0, const model::ModelSpec& spec);

struct Expansion {
  double lambda_hat = 0.0;  // h . scoreSum - (1/2) h^T TSum h
  VectorXd score_sum;       // complete: n^{-1/2} sum_j G_j; partial: n^{-1/2} sum_j U_j
  MatrixXd t_sum;           // complete: n^{-1} sum_j gamma_j; partial: n^{-1} sum_j V_j
};

/// Log-likelihood-ratio expansion for complete observations, scores
/// evaluated on the normalized increments at the previous rotated state.
Expansion expansion_complete(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                             const VectorXd& theta0, const VectorXd& h);

/// Variance-only variant: keeps just the first trace term's score (the
/// Ytilde part), the information of observing the kappa diffusive
/// coordinates alone.
Expansion expansion_diffusive_part(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                                   const VectorXd& theta0, const VectorXd& h);

/// Per-block partial-observation score U_j (d-vector) and conditional
/// variance V_j (d x d), both functionals of the observed block.
struct ScoreBlock {
  int j = 0;
  VectorXd u;
  MatrixXd v;
  VectorXd ydot;
};

ScoreBlock u_v_stats(const sim::PartialBlock& block, int block_index, const model::ModelSpec& spec,
                     const model::ProjectionFrame& frame, const VectorXd& theta0, int e_n);

Expansion expansion_partial(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                            const model::ProjectionFrame& frame, const VectorXd& theta0,
                            const VectorXd& h, int e_n);

}  // namespace lamn::score
