#include "lamn/model.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "lamn/linalg.hpp"

namespace lamn::model {

namespace {

double get(const Params& p, const std::string& key, double dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : it->second;
}

ThetaBox default_box(int d) {
  ThetaBox box;
  box.lo = VectorXd::Constant(d, 0.1);
  box.hi = VectorXd::Constant(d, 10.0);
  return box;
}

// scalar diffusion profile of the langevin family: c(x, t) per parameter.
// kinds 0-2 scale multiplicatively in theta, kind 3 shifts additively (the
// only variant whose information density depends on the state).
struct Shape {
  int kind;  // 0 const, 1 sin, 2 sqrt, 3 addsin
  double eps;
  double value(double x, double t) const {
    switch (kind) {
      case 1: return t * (1.0 + eps * std::sin(x));
      case 2: return t * std::sqrt(1.0 + x * x);
      case 3: return t + eps * std::sin(x);
      default: return t;
    }
  }
  double dtheta(double x) const {
    switch (kind) {
      case 1: return 1.0 + eps * std::sin(x);
      case 2: return std::sqrt(1.0 + x * x);
      default: return 1.0;
    }
  }
};

// scalar theta factor f(theta) used by the factor/stochvol families
struct ThetaFactor {
  int kind;  // 0 exp, 1 scale
  double value(double t) const { return kind == 0 ? std::exp(t) : t; }
  double deriv(double t) const { return kind == 0 ? std::exp(t) : 1.0; }
};

}  // namespace

bool ThetaBox::contains(const VectorXd& theta) const {
  if (theta.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!(theta(i) > lo(i) && theta(i) < hi(i))) return false;
  return true;
}

VectorXd ThetaBox::clamp(const VectorXd& theta, double margin) const {
  VectorXd out = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double w = hi(i) - lo(i);
    out(i) = std::min(hi(i) - margin * w, std::max(lo(i) + margin * w, theta(i)));
  }
  return out;
}

void ModelSpec::check() const {
  if (m < 2 || kappa < 1 || kappa > m) throw ConfigError("ModelSpec: bad dimensions");
  if (kappa < m && !(2 * kappa >= m)) throw ConfigError("ModelSpec: degenerate model needs m/2 <= kappa < m");
  if (U.rows() != m || U.cols() != m) throw ConfigError("ModelSpec: U must be m x m");
  if ((U * U.transpose() - MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("ModelSpec: U is not orthogonal to 1e-12");
  if (z_ini.size() != m) throw ConfigError("ModelSpec: z_ini has wrong size");
  const VectorXd z = rotated_initial();
  const VectorXd th = theta_box.center();
  const MatrixXd at = a_tilde(z, th);
  if (at.rows() != kappa || at.cols() != r) throw ConfigError("ModelSpec: a_tilde has wrong shape");
  linalg::SymPd aat(at * at.transpose());
  if (aat.min_eig() <= 0.0) throw ConfigError("ModelSpec: a_tilde a_tilde^T not positive definite at the initial probe");
  if (b_tilde(z, th).size() != kappa) throw ConfigError("ModelSpec: b_tilde has wrong size");
  if (b_check(z).size() != m - kappa) throw ConfigError("ModelSpec: b_check has wrong size");
}

SchemeSpec SchemeSpec::complete() {
  SchemeSpec s;
  s.kind = SchemeKind::Complete;
  return s;
}

SchemeSpec SchemeSpec::partial(const MatrixXd& Q, const MatrixXd& B) {
  SchemeSpec s;
  s.kind = SchemeKind::Partial;
  s.Q = Q;
  s.B = B;
  const Eigen::Index kappa = Q.rows();
  if (Q.cols() != kappa) throw ConfigError("SchemeSpec: Q must be square");
  if (B.cols() != kappa) throw ConfigError("SchemeSpec: B must have kappa columns");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (Q * Q - Q).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("SchemeSpec: Q is not an orthogonal projection (Q^2 = Q = Q^T) to 1e-12");
  {
    linalg::SymPd bbt(B * B.transpose());
    if (bbt.min_eig() <= 0.0) throw ConfigError("SchemeSpec: B B^T is not positive definite");
  }
  s.q1 = static_cast<int>(linalg::orthonormal_row_span(Q).rows());
  s.q2 = static_cast<int>(B.rows());
  s.q = s.q1 + s.q2;
  // Ker(B) subset Im(Q): every kernel vector must be fixed by Q
  const MatrixXd ker = linalg::kernel_basis(B);
  if (ker.cols() > 0 && (Q * ker - ker).cwiseAbs().maxCoeff() > 1e-10)
    throw ConfigError("SchemeSpec: Ker(B) is not contained in Im(Q)");
  if (s.q < kappa) throw ConfigError("SchemeSpec: q1 + q2 < kappa, inconsistent with Ker(B) in Im(Q)");
  return s;
}

ProjectionFrame build_frame(const SchemeSpec& scheme, int kappa) {
  if (scheme.kind != SchemeKind::Partial) throw ConfigError("build_frame: scheme is not partial");
  ProjectionFrame f;
  f.kappa = kappa;
  const MatrixXd I = MatrixXd::Identity(kappa, kappa);
  const MatrixXd R1 = linalg::orthonormal_row_span(scheme.Q);
  const MatrixXd R3 = linalg::orthonormal_row_span(I - scheme.Q);
  f.Qt1 = R1.rows() > 0 ? MatrixXd(R1 * scheme.Q) : MatrixXd(0, kappa);
  f.Qt2 = scheme.B;
  f.Qt3 = R3.rows() > 0 ? MatrixXd(R3 * (I - scheme.Q)) : MatrixXd(0, kappa);
  f.Bpinv = linalg::pinv(scheme.B);
  f.q1 = static_cast<int>(f.Qt1.rows());
  f.q2 = static_cast<int>(f.Qt2.rows());
  if (f.q1 != scheme.q1) throw NumericalError("build_frame: rank(Q) mismatch");
  if (f.Qt3.rows() != kappa - f.q1) throw NumericalError("build_frame: rank(I-Q) mismatch");
  if (f.Qt3.rows() > 0) {
    const double res = (f.Qt3 * f.Bpinv * scheme.B - f.Qt3).cwiseAbs().maxCoeff();
    if (res > 1e-10) throw NumericalError("build_frame: Qt3 B^+ B != Qt3 (projection/drift compatibility fails)");
  }
  return f;
}

MatrixXd theta_derivative(const ModelSpec& spec, const std::string& which,
                          const VectorXd& z, const VectorXd& theta, int i) {
  if (i < 0 || i >= spec.d) throw ConfigError("theta_derivative: parameter index out of range");
  if (which == "a_tilde" && spec.da_dtheta) return spec.da_dtheta(z, theta, i);
  if (which == "b_tilde" && spec.db_dtheta) return spec.db_dtheta(z, theta, i);
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(theta(i)));
  VectorXd tp = theta, tm = theta;
  tp(i) += h;
  tm(i) -= h;
  if (!spec.theta_box.contains(tp) || !spec.theta_box.contains(tm))
    throw ConfigError("theta_derivative: theta too close to the box boundary for a central step");
  MatrixXd up, um;
  if (which == "a_tilde") {
    up = spec.a_tilde(z, tp);
    um = spec.a_tilde(z, tm);
  } else if (which == "b_tilde") {
    up = spec.b_tilde(z, tp);
    um = spec.b_tilde(z, tm);
  } else {
    throw ConfigError("theta_derivative: unknown coefficient id '" + which + "'");
  }
  return (up - um) / (2.0 * h);
}

MatrixXd diffusion_matrix_derivative(const ModelSpec& spec, const VectorXd& z,
                                     const VectorXd& theta, int i) {
  const MatrixXd a = spec.a_tilde(z, theta);
  const MatrixXd da = theta_derivative(spec, "a_tilde", z, theta, i);
  MatrixXd out = da * a.transpose();
  out += out.transpose().eval();
  return out;
}

MatrixXd grad1_b_check(const ModelSpec& spec, const VectorXd& z) {
  if (spec.grad1_b_check) return spec.grad1_b_check(z);
  const int q2 = spec.m - spec.kappa;
  MatrixXd g(spec.kappa, q2);
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, z.cwiseAbs().maxCoeff());
  for (int i = 0; i < spec.kappa; ++i) {
    VectorXd zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    g.row(i) = ((spec.b_check(zp) - spec.b_check(zm)) / (2.0 * h)).transpose();
  }
  return g;
}

ConditionReport validate_conditions(const ModelSpec& spec, const SchemeSpec& scheme,
                                    const std::vector<std::pair<VectorXd, VectorXd>>& probes) {
  if (probes.empty()) throw ConfigError("validate_conditions: no probes");
  ConditionReport report;
  for (const auto& [z, theta] : probes) {
    if (!spec.theta_box.contains(theta))
      throw ConfigError("validate_conditions: probe theta outside theta_box");
    ConditionProbe pr;
    pr.z = z;
    pr.theta = theta;
    const MatrixXd a = spec.a_tilde(z, theta);
    if (!linalg::all_finite(a)) throw NumericalError("validate_conditions: non-finite a_tilde at probe");
    const MatrixXd apinv = linalg::pinv(a);
    const MatrixXd g1 = grad1_b_check(spec, z);
    double scale = 1.0;
    for (int i = 0; i < spec.d; ++i) {
      const MatrixXd da = theta_derivative(spec, "a_tilde", z, theta, i);
      if (!linalg::all_finite(da)) throw NumericalError("validate_conditions: non-finite derivative at probe");
      const MatrixXd M = da * apinv;  // kappa x kappa
      scale = std::max(scale, 1.0 + da.norm() + M.norm() * (1.0 + g1.norm()));
      // Ker(a) subset Ker(da); trivially satisfied when the kernel is empty
      const MatrixXd kerA = linalg::kernel_basis(a);
      if (kerA.cols() > 0)
        pr.ker_a_residual = std::max(pr.ker_a_residual, (da * kerA).cwiseAbs().maxCoeff());
      // Ker((grad1 b_check)^T) subset Ker((grad1 b_check)^T da a^+)
      const MatrixXd kerG = linalg::kernel_basis(g1.transpose());
      if (kerG.cols() > 0)
        pr.ker_bcheck_residual =
            std::max(pr.ker_bcheck_residual, (g1.transpose() * M * kerG).cwiseAbs().maxCoeff());
      // partial schemes additionally need Q to commute with da a^+
      if (scheme.kind == SchemeKind::Partial)
        pr.commute_residual =
            std::max(pr.commute_residual, (scheme.Q * M - M * scheme.Q).cwiseAbs().maxCoeff());
    }
    pr.scale = scale;
    const double worst = std::max({pr.ker_a_residual, pr.ker_bcheck_residual, pr.commute_residual});
    pr.pass = worst <= 1e-8 * scale;
    report.worst = std::max(report.worst, worst / scale);
    report.pass = report.pass && pr.pass;
    report.probes.push_back(std::move(pr));
  }
  return report;
}

namespace {

BuiltinModel make_langevin(const Params& p, bool integrated_scheme) {
  const int kappa = static_cast<int>(get(p, "kappa", 1));
  if (kappa < 1) throw ConfigError("langevin: kappa must be >= 1");
  const Shape shape{static_cast<int>(get(p, "shape", 0)), get(p, "eps", 0.1)};
  if (shape.kind == 1 && std::abs(shape.eps) >= 1.0)
    throw ConfigError("langevin: |eps| must be < 1 so the diffusion coefficient stays positive");
  const bool diag = get(p, "diag", 0) != 0;
  const double revert = get(p, "mean_revert", 0.0);
  const int d = diag ? kappa : 1;

  ModelSpec s;
  s.name = integrated_scheme ? "integrated" : "langevin";
  s.m = 2 * kappa;
  s.kappa = kappa;
  s.r = kappa;
  s.d = d;
  s.theta_box = default_box(d);
  if (shape.kind == 3) s.theta_box.lo.array() += std::abs(shape.eps);  // keeps c positive
  s.U = MatrixXd::Identity(s.m, s.m);
  s.z_ini = VectorXd::Zero(s.m);
  s.z_ini.head(kappa).setOnes();
  s.a_tilde = [kappa, diag, shape](const VectorXd& z, const VectorXd& th) {
    MatrixXd a = MatrixXd::Zero(kappa, kappa);
    for (int i = 0; i < kappa; ++i) a(i, i) = shape.value(z(0), diag ? th(i) : th(0));
    return a;
  };
  s.da_dtheta = [kappa, diag, shape](const VectorXd& z, const VectorXd&, int i) {
    const double dphi = shape.dtheta(z(0));
    MatrixXd da = MatrixXd::Zero(kappa, kappa);
    if (diag)
      da(i, i) = dphi;
    else
      for (int k = 0; k < kappa; ++k) da(k, k) = dphi;
    return da;
  };
  s.b_tilde = [kappa, revert](const VectorXd& z, const VectorXd&) {
    return VectorXd(-revert * z.head(kappa));
  };
  s.b_check = [kappa](const VectorXd& z) { return VectorXd(z.head(kappa)); };
  s.grad1_b_check = [kappa](const VectorXd&) { return MatrixXd(MatrixXd::Identity(kappa, kappa)); };

  BuiltinModel out;
  out.spec = std::move(s);
  out.scheme = integrated_scheme
                   ? SchemeSpec::partial(MatrixXd::Zero(kappa, kappa), MatrixXd::Identity(kappa, kappa))
                   : SchemeSpec::complete();
  return out;
}

BuiltinModel make_partial_velocity(const Params& p) {
  const int kappa = static_cast<int>(get(p, "kappa", 2));
  const int kp = static_cast<int>(get(p, "kappa_prime", 1));
  if (kp < 1 || kp > kappa) throw ConfigError("langevin-partial-velocity: need 1 <= kappa_prime <= kappa");
  if (kappa + kp > 2 * kappa) throw ConfigError("langevin-partial-velocity: kappa_prime > kappa");
  const ThetaFactor f{static_cast<int>(get(p, "fshape", 0))};

  ModelSpec s;
  s.name = "langevin-partial-velocity";
  s.m = kappa + kp;
  s.kappa = kappa;
  s.r = kappa;
  s.d = 1;
  s.theta_box = default_box(1);
  s.U = MatrixXd::Identity(s.m, s.m);
  s.z_ini = VectorXd::Zero(s.m);
  s.z_ini.head(kappa).setOnes();
  s.a_tilde = [kappa, f](const VectorXd&, const VectorXd& th) {
    return MatrixXd(f.value(th(0)) * MatrixXd::Identity(kappa, kappa));
  };
  s.da_dtheta = [kappa, f](const VectorXd&, const VectorXd& th, int) {
    return MatrixXd(f.deriv(th(0)) * MatrixXd::Identity(kappa, kappa));
  };
  s.b_tilde = [kappa](const VectorXd&, const VectorXd&) { return VectorXd(VectorXd::Zero(kappa)); };
  s.b_check = [kp](const VectorXd& z) { return VectorXd(z.head(kp)); };
  s.grad1_b_check = [kappa, kp](const VectorXd&) {
    MatrixXd g = MatrixXd::Zero(kappa, kp);
    g.topRows(kp) = MatrixXd::Identity(kp, kp);
    return g;
  };

  BuiltinModel out;
  out.spec = std::move(s);
  out.scheme = SchemeSpec::complete();
  return out;
}

BuiltinModel make_shared_noise(const Params& p) {
  const double eps = get(p, "eps", 0.0);
  if (std::abs(eps) >= 1.0) throw ConfigError("shared-noise: |eps| must be < 1");

  ModelSpec s;
  s.name = "shared-noise";
  s.m = 2;
  s.kappa = 1;
  s.r = 1;
  s.d = 1;
  s.theta_box = default_box(1);
  const double isq = 1.0 / std::sqrt(2.0);
  s.U = (MatrixXd(2, 2) << isq, isq, isq, -isq).finished();
  s.z_ini = (VectorXd(2) << 1.0, 0.0).finished();
  // original coefficients c(x, y, theta) = theta (1 + eps sin(x+y)), e(x, y) = x + y
  auto ctil = [eps](double sum, double th) { return th * (1.0 + eps * std::sin(sum)); };
  auto dctil = [eps](double sum) { return 1.0 + eps * std::sin(sum); };
  s.a_tilde = [ctil](const VectorXd& z, const VectorXd& th) {
    const double sum = std::sqrt(2.0) * z(0);
    return MatrixXd(MatrixXd::Constant(1, 1, std::sqrt(2.0) * ctil(sum, th(0))));
  };
  s.da_dtheta = [dctil](const VectorXd& z, const VectorXd&, int) {
    const double sum = std::sqrt(2.0) * z(0);
    return MatrixXd(MatrixXd::Constant(1, 1, std::sqrt(2.0) * dctil(sum)));
  };
  s.b_tilde = [](const VectorXd& z, const VectorXd&) {
    return VectorXd(VectorXd::Constant(1, z(0)));  // (2d + e)/sqrt(2) with d = 0, e = x + y
  };
  s.b_check = [](const VectorXd& z) { return VectorXd(VectorXd::Constant(1, z(0))); };
  s.grad1_b_check = [](const VectorXd&) { return MatrixXd(MatrixXd::Identity(1, 1)); };

  BuiltinModel out;
  out.spec = std::move(s);
  out.scheme = SchemeSpec::complete();
  return out;
}

BuiltinModel make_factor(const Params& p, bool scaled) {
  const int m = static_cast<int>(get(p, "m", 3));
  const int kappa = static_cast<int>(get(p, "kappa", 2));
  if (!(kappa >= 1 && kappa < m && 2 * kappa >= m)) throw ConfigError("factor: need m/2 <= kappa < m");
  const ThetaFactor f{scaled ? 1 : static_cast<int>(get(p, "fshape", 0))};

  MatrixXd A(m, kappa);
  A.topRows(kappa) = MatrixXd::Identity(kappa, kappa);
  A.bottomRows(m - kappa).setOnes();
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatrixXd U = svd.matrixU().transpose();  // U A = (Lambda; 0) V^T
  const MatrixXd LamV = svd.singularValues().asDiagonal() * svd.matrixV().transpose();

  // drift e(z) = 0.5 G z with a cyclic shift G; rotated drift is 0.5 U G U^T z
  MatrixXd G = MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) G(i, (i + 1) % m) = 1.0;
  const MatrixXd H = 0.5 * U * G * U.transpose();
  const MatrixXd grad1 = H.bottomRows(m - kappa).leftCols(kappa).transpose();
  if (linalg::kernel_basis(grad1.transpose()).cols() > kappa - (m - kappa))
    throw ConfigError("factor: drift gradient grad1 b_check is rank deficient");

  ModelSpec s;
  s.name = scaled ? "scaled-factor" : "factor";
  s.m = m;
  s.kappa = kappa;
  s.r = kappa;
  s.d = 1;
  s.theta_box = default_box(1);
  s.U = U;
  s.z_ini = VectorXd::Ones(m);
  s.a_tilde = [LamV, f](const VectorXd&, const VectorXd& th) {
    return MatrixXd(f.value(th(0)) * LamV);
  };
  s.da_dtheta = [LamV, f](const VectorXd&, const VectorXd& th, int) {
    return MatrixXd(f.deriv(th(0)) * LamV);
  };
  s.b_tilde = [H, kappa](const VectorXd& z, const VectorXd&) { return VectorXd(H.topRows(kappa) * z); };
  s.b_check = [H, kappa](const VectorXd& z) { return VectorXd(H.bottomRows(H.rows() - kappa) * z); };
  s.grad1_b_check = [grad1](const VectorXd&) { return grad1; };

  BuiltinModel out;
  out.spec = std::move(s);
  out.scheme = SchemeSpec::complete();
  return out;
}

BuiltinModel make_stochvol(const Params& p, bool diagonal) {
  ModelSpec s;
  s.name = diagonal ? "stochvol-diagonal" : "stochvol-common";
  s.m = 3;
  s.kappa = 2;
  s.r = 2;
  s.d = 1;
  s.theta_box = default_box(1);
  s.U = MatrixXd::Identity(3, 3);
  s.z_ini = (VectorXd(3) << 1.0, 1.0, 0.0).finished();
  if (diagonal) {
    const double c22 = get(p, "c22", 1.0);
    if (c22 <= 0.0) throw ConfigError("stochvol-diagonal: c22 must be positive");
    s.a_tilde = [c22](const VectorXd&, const VectorXd& th) {
      MatrixXd a = MatrixXd::Zero(2, 2);
      a(0, 0) = th(0);
      a(1, 1) = c22;
      return a;
    };
    s.da_dtheta = [](const VectorXd&, const VectorXd&, int) {
      MatrixXd da = MatrixXd::Zero(2, 2);
      da(0, 0) = 1.0;
      return da;
    };
  } else {
    const ThetaFactor f{static_cast<int>(get(p, "fshape", 0))};
    const double off = get(p, "a_off", 0.3);
    if (std::abs(off) >= 1.0) throw ConfigError("stochvol-common: |a_off| must be < 1 to keep A A^T positive definite");
    MatrixXd A(2, 2);
    A << 1.0, off, off, 1.0;
    s.a_tilde = [A, f](const VectorXd&, const VectorXd& th) { return MatrixXd(f.value(th(0)) * A); };
    s.da_dtheta = [A, f](const VectorXd&, const VectorXd& th, int) { return MatrixXd(f.deriv(th(0)) * A); };
  }
  s.b_tilde = [](const VectorXd&, const VectorXd&) { return VectorXd(VectorXd::Zero(2)); };
  s.b_check = [](const VectorXd& z) { return VectorXd(VectorXd::Constant(1, z(1))); };
  s.grad1_b_check = [](const VectorXd&) { return MatrixXd((MatrixXd(2, 1) << 0.0, 1.0).finished()); };

  MatrixXd Q = MatrixXd::Zero(2, 2);
  Q(0, 0) = 1.0;
  MatrixXd B(1, 2);
  B << 0.0, 1.0;

  BuiltinModel out;
  out.spec = std::move(s);
  out.scheme = SchemeSpec::partial(Q, B);
  return out;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"langevin", "langevin-partial-velocity", "shared-noise", "factor",
          "scaled-factor", "integrated", "stochvol-common", "stochvol-diagonal"};
}

BuiltinModel builtin_model(const std::string& name, const Params& params) {
  BuiltinModel out;
  if (name == "langevin")
    out = make_langevin(params, false);
  else if (name == "integrated")
    out = make_langevin(params, true);
  else if (name == "langevin-partial-velocity")
    out = make_partial_velocity(params);
  else if (name == "shared-noise")
    out = make_shared_noise(params);
  else if (name == "factor")
    out = make_factor(params, false);
  else if (name == "scaled-factor")
    out = make_factor(params, true);
  else if (name == "stochvol-common")
    out = make_stochvol(params, false);
  else if (name == "stochvol-diagonal")
    out = make_stochvol(params, true);
  else
    throw ConfigError("unknown builtin model '" + name + "'");
  out.spec.check();
  return out;
}

namespace {

// trace integrand of (Gamma-ex): tr((aa^T)^{-1} d_i(aa^T) (aa^T)^{-1} d_j(aa^T))
MatrixXd gamma_ex_integrand(const ModelSpec& spec, const VectorXd& z, const VectorXd& theta) {
  const MatrixXd a = spec.a_tilde(z, theta);
  linalg::SymPd aat(a * a.transpose());
  std::vector<MatrixXd> m(spec.d);
  for (int i = 0; i < spec.d; ++i)
    m[static_cast<size_t>(i)] = aat.solve(diffusion_matrix_derivative(spec, z, theta, i));
  MatrixXd g(spec.d, spec.d);
  for (int i = 0; i < spec.d; ++i)
    for (int j = 0; j < spec.d; ++j)
      g(i, j) = (m[static_cast<size_t>(i)] * m[static_cast<size_t>(j)]).trace();
  return g;
}

MatrixXd path_average(const MatrixXd& fine_states,
                      const std::function<MatrixXd(const VectorXd&)>& fn) {
  // left-endpoint rule on the fine grid
  const Eigen::Index nsteps = fine_states.rows() - 1;
  std::vector<MatrixXd> vals(static_cast<size_t>(nsteps));
  for (Eigen::Index t = 0; t < nsteps; ++t) vals[static_cast<size_t>(t)] = fn(fine_states.row(t).transpose());
  return linalg::pairwise_sum(std::move(vals)) / static_cast<double>(nsteps);
}

// (d_theta f / f)^2 for models with a scalar theta factor: d_theta a a^+
// is (d_theta f / f) I there, so read the ratio off the corner entry.
double scalar_factor_ratio(const ModelSpec& spec, const VectorXd& theta0) {
  const VectorXd z = spec.rotated_initial();
  const MatrixXd a = spec.a_tilde(z, theta0);
  const MatrixXd da = theta_derivative(spec, "a_tilde", z, theta0, 0);
  const double r = (da * linalg::pinv(a))(0, 0);
  return r * r;
}

}  // namespace

MatrixXd builtin_closed_form_info(const std::string& name, const ModelSpec& spec,
                                  const MatrixXd& fine_states, const VectorXd& theta0) {
  if (name == "langevin" || name == "shared-noise") {
    return path_average(fine_states,
                        [&](const VectorXd& z) { return gamma_ex_integrand(spec, z, theta0); });
  }
  if (name == "integrated") {
    return 0.5 * path_average(fine_states,
                              [&](const VectorXd& z) { return gamma_ex_integrand(spec, z, theta0); });
  }
  if (name == "langevin-partial-velocity") {
    const int kappa = spec.kappa;
    const int kp = spec.m - spec.kappa;
    return MatrixXd::Constant(1, 1, 2.0 * (kappa + kp) * scalar_factor_ratio(spec, theta0));
  }
  if (name == "factor" || name == "scaled-factor") {
    return MatrixXd::Constant(1, 1, 2.0 * spec.m * scalar_factor_ratio(spec, theta0));
  }
  if (name == "stochvol-common" || name == "stochvol-diagonal") {
    return 0.5 * path_average(fine_states, [&](const VectorXd& z) {
      return builtin_closed_form_g(name, spec, z.head(spec.kappa), theta0);
    });
  }
  throw ConfigError("no closed-form information formula for model '" + name + "'");
}

bool builtin_has_closed_form_g(const std::string& name) {
  return name == "integrated" || name == "stochvol-common" || name == "stochvol-diagonal";
}

MatrixXd builtin_closed_form_g(const std::string& name, const ModelSpec& spec,
                               const VectorXd& x, const VectorXd& theta0) {
  VectorXd z = spec.rotated_initial();
  z.head(spec.kappa) = x;
  if (name == "integrated") return gamma_ex_integrand(spec, z, theta0);
  if (name == "stochvol-common") {
    // 8 d_i f d_j f / f^2
    const MatrixXd a = spec.a_tilde(z, theta0);
    const MatrixXd da = theta_derivative(spec, "a_tilde", z, theta0, 0);
    const double dff = da(0, 0) / a(0, 0);
    return MatrixXd::Constant(1, 1, 8.0 * dff * dff);
  }
  if (name == "stochvol-diagonal") {
    const MatrixXd a = spec.a_tilde(z, theta0);
    const MatrixXd da = theta_derivative(spec, "a_tilde", z, theta0, 0);
    const double t1 = da(0, 0) / a(0, 0);
    const double t2 = da(1, 1) / a(1, 1);
    return MatrixXd::Constant(1, 1, 4.0 * t1 * t1 + 4.0 * t2 * t2);
  }
  throw ConfigError("no closed-form g for model '" + name + "'");
}

}  // namespace lamn::model
