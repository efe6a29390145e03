#include "lamn/blockcov.hpp"

#include <cmath>

#include "lamn/linalg.hpp"

namespace lamn::blockcov {

KTilde ktilde_from_parts(const MatrixXd& aat, const MatrixXd& grad1) {
  KTilde kt;
  kt.kappa = static_cast<int>(aat.rows());
  kt.q2 = static_cast<int>(grad1.cols());
  kt.aat = aat;
  kt.grad1 = grad1;
  const int m = kt.kappa + kt.q2;

  const MatrixXd aatG = aat * grad1;
  const MatrixXd phi = grad1.transpose() * aatG;  // check-phi(aa^T)
  kt.S = phi / 12.0;

  kt.dense.resize(m, m);
  kt.dense.topLeftCorner(kt.kappa, kt.kappa) = aat;
  kt.dense.topRightCorner(kt.kappa, kt.q2) = 0.5 * aatG;
  kt.dense.bottomLeftCorner(kt.q2, kt.kappa) = 0.5 * aatG.transpose();
  kt.dense.bottomRightCorner(kt.q2, kt.q2) = phi / 3.0;

  linalg::SymPd aat_f(aat);
  if (aat_f.degraded()) throw NumericalError("ktilde_build: aa^T is not positive definite");
  linalg::SymPd s_f(kt.S);
  if (s_f.degraded())
    throw NumericalError("ktilde_build: S singular (grad1 b_check rank deficient), min eigenvalue " +
                         std::to_string(s_f.min_eig()));

  // blockwise inverse from the Schur factorization
  const MatrixXd Sinv = s_f.inverse();
  const MatrixXd GSinv = grad1 * Sinv;
  kt.inverse.resize(m, m);
  kt.inverse.topLeftCorner(kt.kappa, kt.kappa) = aat_f.inverse() + 0.25 * GSinv * grad1.transpose();
  kt.inverse.topRightCorner(kt.kappa, kt.q2) = -0.5 * GSinv;
  kt.inverse.bottomLeftCorner(kt.q2, kt.kappa) = -0.5 * GSinv.transpose();
  kt.inverse.bottomRightCorner(kt.q2, kt.q2) = Sinv;

  kt.log_det = aat_f.log_det() + s_f.log_det();
  return kt;
}

KTilde ktilde_build(const model::ModelSpec& spec, const VectorXd& z0, const VectorXd& theta) {
  const MatrixXd a = spec.a_tilde(z0, theta);
  return ktilde_from_parts(a * a.transpose(), model::grad1_b_check(spec, z0));
}

MatrixXd pinv(const MatrixXd& a) { return linalg::pinv(a); }

MatrixXd v_matrix(int L) {
  if (L < 1) throw ConfigError("v_matrix: L must be >= 1");
  MatrixXd v = MatrixXd::Zero(L + 1, L + 1);
  for (int i = 0; i <= L; ++i) {
    v(i, i) = (i == 0 || i == L) ? 1.0 / 3.0 : 2.0 / 3.0;
    if (i + 1 <= L) {
      v(i, i + 1) = 1.0 / 6.0;
      v(i + 1, i) = 1.0 / 6.0;
    }
  }
  return v;
}

namespace {

struct Upsilon {
  // Upsilon_{i,j}(A) = Qt_i A Qt_j^T; empty blocks when rank is zero
  MatrixXd u11, u12, u22, u13, u23, u33, u31, u32;
};

Upsilon upsilon(const MatrixXd& A, const model::ProjectionFrame& f) {
  Upsilon u;
  u.u11 = f.Qt1 * A * f.Qt1.transpose();
  u.u12 = f.Qt1 * A * f.Qt2.transpose();
  u.u22 = f.Qt2 * A * f.Qt2.transpose();
  u.u13 = f.Qt1 * A * f.Qt3.transpose();
  u.u23 = f.Qt2 * A * f.Qt3.transpose();
  u.u33 = f.Qt3 * A * f.Qt3.transpose();
  u.u31 = f.Qt3 * A * f.Qt1.transpose();
  u.u32 = f.Qt3 * A * f.Qt2.transpose();
  return u;
}

// slot block [ u11, c12*u12 ; c21*u21, c22*u22 ] of size q x q
MatrixXd xi(const Upsilon& u, int q1, int q2, double c11, double c12, double c22) {
  MatrixXd b = MatrixXd::Zero(q1 + q2, q1 + q2);
  if (q1 > 0) {
    b.topLeftCorner(q1, q1) = c11 * u.u11;
    b.topRightCorner(q1, q2) = c12 * u.u12;
    b.bottomLeftCorner(q2, q1) = c12 * u.u12.transpose();
  }
  b.bottomRightCorner(q2, q2) = c22 * u.u22;
  return b;
}

// xi2 = [ 0, u12/2 ; 0, u22/6 ]
MatrixXd xi2(const Upsilon& u, int q1, int q2) {
  MatrixXd b = MatrixXd::Zero(q1 + q2, q1 + q2);
  if (q1 > 0) b.topRightCorner(q1, q2) = 0.5 * u.u12;
  b.bottomRightCorner(q2, q2) = u.u22 / 6.0;
  return b;
}

}  // namespace

PsiMatrix psi_build(const MatrixXd& A, const model::ProjectionFrame& frame, int k, int l, int L) {
  if (L < 3) throw ConfigError("psi_build: L must be >= 3");
  if (k < 1 || k > 2 || l < 1 || l > 2) throw ConfigError("psi_build: k, l must be 1 or 2");
  if (A.rows() != frame.kappa || A.cols() != frame.kappa)
    throw ConfigError("psi_build: A must be kappa x kappa");
  const int q1 = frame.q1;
  const int q2 = frame.q2;
  const int q = q1 + q2;
  const int tail = frame.kappa - q1;

  const Upsilon u = upsilon(A, frame);
  const MatrixXd x1 = xi(u, q1, q2, 1.0, 0.5, 1.0 / 3.0);
  const MatrixXd x3 = xi(u, q1, q2, 1.0, 0.5, 2.0 / 3.0);
  const MatrixXd x2 = xi2(u, q1, q2);

  const Eigen::Index rows = static_cast<Eigen::Index>(L) * q + (k == 2 ? tail : 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(L) * q + (l == 2 ? tail : 0);
  PsiMatrix psi;
  psi.k = k;
  psi.l = l;
  psi.L = L;
  psi.base = A;
  psi.dense = MatrixXd::Zero(rows, cols);

  for (int s = 0; s < L; ++s) {
    psi.dense.block(static_cast<Eigen::Index>(s) * q, static_cast<Eigen::Index>(s) * q, q, q) =
        (s == 0) ? x1 : x3;
    if (s + 1 < L) {
      psi.dense.block(static_cast<Eigen::Index>(s) * q, static_cast<Eigen::Index>(s + 1) * q, q, q) = x2;
      psi.dense.block(static_cast<Eigen::Index>(s + 1) * q, static_cast<Eigen::Index>(s) * q, q, q) =
          x2.transpose();
    }
  }
  if (tail > 0) {
    const Eigen::Index last = static_cast<Eigen::Index>(L - 1) * q;
    const Eigen::Index tcol = static_cast<Eigen::Index>(L) * q;
    if (l == 2) {
      if (q1 > 0) psi.dense.block(last, tcol, q1, tail) = 0.5 * u.u13;
      psi.dense.block(last + q1, tcol, q2, tail) = u.u23 / 6.0;
    }
    if (k == 2) {
      if (q1 > 0) psi.dense.block(tcol, last, tail, q1) = 0.5 * u.u31;
      psi.dense.block(tcol, last + q1, tail, q2) = u.u32 / 6.0;
      if (l == 2) psi.dense.block(tcol, tcol, tail, tail) = u.u33 / 3.0;
    }
  }
  return psi;
}

MatrixXd psi_observed(const MatrixXd& A, const model::ProjectionFrame& frame, int L,
                      bool first_block) {
  MatrixXd psi = psi_build(A, frame, 1, 1, L).dense;
  if (first_block) return psi;
  // reconstruction noise of Ydot enters the first slot's Ycheck entry:
  // + (1/3) B (I-Q) A (I-Q)^T B^T
  const MatrixXd P = frame.Qt3.transpose() * frame.Qt3;  // I - Q
  const MatrixXd extra = frame.Qt2 * P * A * P.transpose() * frame.Qt2.transpose() / 3.0;
  psi.block(frame.q1, frame.q1, frame.q2, frame.q2) += extra;
  return psi;
}

SchurQuadratic schur_quadratic(const MatrixXd& A1, const MatrixXd& A2, const MatrixXd& B,
                               const MatrixXd& C) {
  const Eigen::Index n1 = A1.rows();
  const Eigen::Index n2 = C.rows();
  if (A1.cols() != n1 || A2.rows() != n1 || A2.cols() != n1 || B.rows() != n1 || B.cols() != n2 ||
      C.cols() != n2)
    throw ConfigError("schur_quadratic: incompatible block shapes");

  Eigen::PartialPivLU<MatrixXd> a1(A1);
  if (std::abs(a1.determinant()) < 1e-300) throw NumericalError("schur_quadratic: A1 singular");
  const MatrixXd A1iA2 = a1.solve(A2);
  const MatrixXd A1iB = a1.solve(B);
  const MatrixXd schur = C - B.transpose() * A1iB;
  Eigen::PartialPivLU<MatrixXd> sc(schur);
  if (std::abs(sc.determinant()) < 1e-300)
    throw NumericalError("schur_quadratic: Schur complement singular");

  MatrixXd big(n1 + n2, n1 + n2);
  big.topLeftCorner(n1, n1) = A1;
  big.topRightCorner(n1, n2) = B;
  big.bottomLeftCorner(n2, n1) = B.transpose();
  big.bottomRightCorner(n2, n2) = C;
  MatrixXd stacked(n1 + n2, n1);
  stacked.topRows(n1) = A2;
  stacked.bottomRows(n2) = B.transpose();
  MatrixXd wide(n1, n1 + n2);
  wide.leftCols(n1) = A2;
  wide.rightCols(n2) = B;

  SchurQuadratic out;
  out.left = a1.solve(wide * Eigen::PartialPivLU<MatrixXd>(big).solve(stacked));
  const MatrixXd E = A1iA2 - MatrixXd::Identity(n1, n1);            // A1^{-1} A2 - I
  const MatrixXd F = A2 * a1.inverse() - MatrixXd::Identity(n1, n1);  // A2 A1^{-1} - I
  out.right = A1iA2 * A1iA2 + a1.solve(F * B * sc.solve(B.transpose() * E));
  out.discrepancy = (out.left - out.right).cwiseAbs().maxCoeff();
  return out;
}

namespace {

struct PsiInvPack {
  MatrixXd psi;      // psi^{k,k}(A)
  MatrixXd inv;      // psi^{-1}
  std::vector<MatrixXd> dinv;  // d_i (psi^{-1}) = -psi^{-1} psi(dA_i) psi^{-1}
};

PsiInvPack make_pack(int k, int L, const MatrixXd& A, const std::vector<MatrixXd>& dA,
                     const model::ProjectionFrame& frame) {
  PsiInvPack p;
  p.psi = psi_build(A, frame, k, k, L).dense;
  linalg::SymPd f(p.psi);
  if (f.cond() > 1e12)
    throw NumericalError("t_trace: psi^{" + std::to_string(k) + "," + std::to_string(k) +
                         "} condition number above 1e12");
  p.inv = f.inverse();
  p.dinv.reserve(dA.size());
  for (const auto& da : dA) {
    const MatrixXd pd = psi_build(da, frame, k, k, L).dense;
    p.dinv.push_back(-p.inv * pd * p.inv);
  }
  return p;
}

}  // namespace

MatrixXd t_trace(const VectorXd& x, const VectorXd& theta0, int k, int l, int L,
                 const model::ModelSpec& spec, const model::ProjectionFrame& frame) {
  VectorXd z = spec.rotated_initial();
  z.head(spec.kappa) = x;
  const MatrixXd a = spec.a_tilde(z, theta0);
  const MatrixXd A = a * a.transpose();
  std::vector<MatrixXd> dA(static_cast<size_t>(spec.d));
  for (int i = 0; i < spec.d; ++i)
    dA[static_cast<size_t>(i)] = model::diffusion_matrix_derivative(spec, z, theta0, i);

  const PsiInvPack pk = make_pack(k, L, A, dA, frame);
  const PsiInvPack pl = (l == k) ? pk : make_pack(l, L, A, dA, frame);
  const MatrixXd pkl = psi_build(A, frame, k, l, L).dense;
  const MatrixXd plk = psi_build(A, frame, l, k, L).dense;

  MatrixXd t(spec.d, spec.d);
  for (int i = 0; i < spec.d; ++i)
    for (int j = 0; j < spec.d; ++j)
      t(i, j) = (pk.dinv[static_cast<size_t>(i)] * pkl * pl.dinv[static_cast<size_t>(j)] * plk).trace();
  return t;
}

GLimit g_limit(const VectorXd& x, const VectorXd& theta0, const model::ModelSpec& spec,
               const model::ProjectionFrame& frame, const std::vector<int>& L_grid, double tol) {
  if (L_grid.size() < 2) throw ConfigError("g_limit: need at least two L values");
  for (size_t i = 1; i < L_grid.size(); ++i)
    if (L_grid[i] <= L_grid[i - 1]) throw ConfigError("g_limit: L grid must be increasing");
  if (L_grid.back() < 100) throw ConfigError("g_limit: largest L must be >= 100");

  GLimit out;
  out.L_grid = L_grid;
  const int kls[4][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};

  std::vector<std::array<MatrixXd, 4>> scaled(L_grid.size());
  for (size_t li = 0; li < L_grid.size(); ++li)
    for (int c = 0; c < 4; ++c)
      scaled[li][static_cast<size_t>(c)] =
          t_trace(x, theta0, kls[c][0], kls[c][1], L_grid[li], spec, frame) /
          static_cast<double>(L_grid[li]);

  // two-point Richardson in 1/L on the two largest L, averaged over (k,l)
  const size_t nl = L_grid.size();
  const double L1 = L_grid[nl - 2];
  const double L2 = L_grid[nl - 1];
  MatrixXd g = MatrixXd::Zero(spec.d, spec.d);
  for (int c = 0; c < 4; ++c)
    g += (L2 * scaled[nl - 1][static_cast<size_t>(c)] - L1 * scaled[nl - 2][static_cast<size_t>(c)]) /
         (L2 - L1);
  g /= 4.0;
  out.g = g;

  for (size_t li = 0; li < nl; ++li) {
    double res = 0.0;
    for (int c = 0; c < 4; ++c)
      res = std::max(res, (scaled[li][static_cast<size_t>(c)] - g).cwiseAbs().maxCoeff());
    out.residuals.push_back(res);
  }
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  for (int c = 1; c < 4; ++c)
    out.max_kl_disagreement =
        std::max(out.max_kl_disagreement,
                 (scaled[nl - 1][static_cast<size_t>(c)] - scaled[nl - 1][0]).cwiseAbs().maxCoeff());
  bool decreasing = true;
  for (size_t li = 1; li < nl; ++li)
    if (out.residuals[li] > out.residuals[li - 1] + 1e-12 * scale) decreasing = false;
  out.converged = decreasing && out.max_kl_disagreement <= tol * scale;
  return out;
}

}  // namespace lamn::blockcov
