#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lamn/common.hpp"

namespace lamn::model {

/// Axis-aligned open box in parameter space.
struct ThetaBox {
  VectorXd lo;
  VectorXd hi;

  bool contains(const VectorXd& theta) const;
  VectorXd clamp(const VectorXd& theta, double margin = 1e-9) const;
  VectorXd center() const { return 0.5 * (lo + hi); }
};

/// One diffusion model in the rotated frame: coefficients of
///   d Ytilde = b_tilde(Y, theta) dt + a_tilde(Y, theta) dW
///   d Ycheck = b_check(Y) dt
/// All callbacks take the rotated state z = U x.
struct ModelSpec {
  std::string name;
  int m = 0;      // state dimension
  int kappa = 0;  // rank of the diffusion coefficient
  int r = 0;      // Wiener dimension
  int d = 0;      // parameter dimension
  ThetaBox theta_box;
  VectorXd z_ini;  // raw-frame initial state
  MatrixXd U;      // m x m orthogonal rotation

  std::function<MatrixXd(const VectorXd&, const VectorXd&)> a_tilde;  // kappa x r
  std::function<VectorXd(const VectorXd&, const VectorXd&)> b_tilde;  // kappa
  std::function<VectorXd(const VectorXd&)> b_check;                   // m - kappa

  // optional analytic derivatives; finite differences otherwise
  std::function<MatrixXd(const VectorXd&, const VectorXd&, int)> da_dtheta;  // kappa x r
  std::function<VectorXd(const VectorXd&, const VectorXd&, int)> db_dtheta;  // kappa
  std::function<MatrixXd(const VectorXd&)> grad1_b_check;                    // kappa x (m-kappa)

  VectorXd rotated_initial() const { return U * z_ini; }
  void check() const;  // validates dimensions and the invariants below
};

enum class SchemeKind { Complete, Partial };

/// Observation scheme. For Partial, Q is a kappa x kappa orthogonal
/// projection and B the (m-kappa) x kappa matrix of the Ycheck drift.
struct SchemeSpec {
  SchemeKind kind = SchemeKind::Complete;
  MatrixXd Q;
  MatrixXd B;
  int q1 = 0;  // rank(Q)
  int q2 = 0;  // m - kappa
  int q = 0;   // q1 + q2

  static SchemeSpec complete();
  static SchemeSpec partial(const MatrixXd& Q, const MatrixXd& B);
};

/// Row bases Qt1 = R1 Q, Qt2 = B, Qt3 = R3 (I - Q). R1/R3 are orthonormal
/// row bases of Im(Q) and Im(I-Q) from Gram-Schmidt over columns in index
/// order, so the construction is deterministic.
struct ProjectionFrame {
  MatrixXd Qt1;  // q1 x kappa
  MatrixXd Qt2;  // q2 x kappa
  MatrixXd Qt3;  // (kappa - q1) x kappa
  MatrixXd Bpinv;  // kappa x q2, Moore-Penrose inverse of B
  int kappa = 0;
  int q1 = 0;
  int q2 = 0;
};

ProjectionFrame build_frame(const SchemeSpec& scheme, int kappa);

/// Central finite difference in theta_i with step cbrt(eps)*max(1,|theta_i|),
/// or the analytic callback when the model provides one.
MatrixXd theta_derivative(const ModelSpec& spec, const std::string& which,
                          const VectorXd& z, const VectorXd& theta, int i);

/// d(a_tilde a_tilde^T)/d(theta_i).
MatrixXd diffusion_matrix_derivative(const ModelSpec& spec, const VectorXd& z,
                                     const VectorXd& theta, int i);

/// Gradient of b_check in the first kappa coordinates, kappa x (m-kappa).
MatrixXd grad1_b_check(const ModelSpec& spec, const VectorXd& z);

struct ConditionProbe {
  VectorXd z;
  VectorXd theta;
  double ker_a_residual = 0.0;       // Ker(a) subset Ker(da)
  double ker_bcheck_residual = 0.0;  // Ker(grad1 b_check^T) inclusion
  double commute_residual = 0.0;     // Q commutation, partial schemes
  double scale = 1.0;
  bool pass = true;
};

struct ConditionReport {
  std::vector<ConditionProbe> probes;
  bool pass = true;
  double worst = 0.0;
};

/// Numerically checks the kernel-inclusion and projection-commutation
/// regularity of the coefficients at the given probes; passes iff every
/// residual is below 1e-8 * scale.
ConditionReport validate_conditions(const ModelSpec& spec, const SchemeSpec& scheme,
                                    const std::vector<std::pair<VectorXd, VectorXd>>& probes);

using Params = std::map<std::string, double>;

/// Builtin model + scheme presets:
///   langevin, langevin-partial-velocity, shared-noise, factor,
///   scaled-factor, integrated, stochvol-common, stochvol-diagonal
struct BuiltinModel {
  ModelSpec spec;
  SchemeSpec scheme;
};

BuiltinModel builtin_model(const std::string& name, const Params& params = {});

std::vector<std::string> builtin_names();

/// Closed-form information matrix of the builtin's worked example,
/// evaluated by quadrature along a fine-grid path (rotated frame states).
/// For partial-observation builtins this is Gamma'; otherwise Gamma.
MatrixXd builtin_closed_form_info(const std::string& name, const ModelSpec& spec,
                                  const MatrixXd& fine_states, const VectorXd& theta0);

/// Closed-form per-block information density g(x) for partial builtins.
MatrixXd builtin_closed_form_g(const std::string& name, const ModelSpec& spec,
                               const VectorXd& x, const VectorXd& theta0);
bool builtin_has_closed_form_g(const std::string& name);

}  // namespace lamn::model
