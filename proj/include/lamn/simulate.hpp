#pragma once

#include <cstdint>
#include <vector>

#include "lamn/common.hpp"
#include "lamn/model.hpp"

namespace lamn::sim {

/// Fine-grid Euler-Maruyama sample of one model path on [0, 1] in the
/// rotated frame. states has n*substeps + 1 rows, spacing 1/(n*substeps).
struct PathSample {
  int n = 0;
  int substeps = 0;
  std::uint64_t seed = 0;
  std::string model;
  VectorXd theta;
  MatrixXd states;  // (n*substeps + 1) x m, rotated frame

  double dt() const { return 1.0 / (static_cast<double>(n) * substeps); }
};

/// Observations at times k/n. Complete: rows are the rotated path states.
/// Partial: rows hold (Qt1 Ytilde, Ycheck), q1 + q2 columns.
struct ObservationSet {
  int n = 0;
  model::SchemeKind kind = model::SchemeKind::Complete;
  MatrixXd rows;  // (n+1) x (m or q1+q2)
};

/// Block partition of [0, 1]: L_n blocks of e_n observation intervals,
/// remainder dropped.
struct BlockLayout {
  int e_n = 0;
  int L_n = 0;

  static BlockLayout make(int n, int e_n);
  /// Default block length max(3, round(ln n)).
  static int default_e_n(int n);
};

PathSample simulate_path(const model::ModelSpec& spec, const VectorXd& theta, int n,
                         int substeps, std::uint64_t seed);

/// Coarser view of a path: keeps every stride-th fine state (stride must
/// divide substeps). Quadratures stay accurate down to ~3200 grid points.
PathSample decimate(const PathSample& path, int stride);

ObservationSet observe(const PathSample& path, const model::SchemeSpec& scheme,
                       const model::ModelSpec& spec, int n);

ObservationSet observe(const PathSample& path, const model::SchemeSpec& scheme,
                       const model::ModelSpec& spec);

/// Normalized observation increments: first kappa components
/// sqrt(n) * dYtilde, last m-kappa components n^{3/2} (dYcheck - b_check/n).
/// Row j-1 holds the increment over ((j-1)/n, j/n].
MatrixXd normalized_increments_complete(const ObservationSet& obs, const model::ModelSpec& spec);

/// One partial-observation block: the observable vector X' (q * e_n) and
/// the reconstructed latent state Ydot (kappa).
struct PartialBlock {
  VectorXd xprime;
  VectorXd ydot;
};

/// Builds the L_n observable blocks. Ydot_0 = z_ini's Ytilde part; for
/// j >= 1, Ydot_j = Q Ytilde + R3^T (n Qt3 B^+ (Ycheck(t_j0) - Ycheck(t_j,-1))).
/// The first slot's Ycheck entry is drift-corrected with B Ydot_j / n.
std::vector<PartialBlock> partial_blocks(const ObservationSet& obs, const BlockLayout& layout,
                                         const model::ModelSpec& spec,
                                         const model::ProjectionFrame& frame);

}  // namespace lamn::sim
