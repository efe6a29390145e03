#include "lamn/score.hpp"

#include <cmath>

#include "lamn/linalg.hpp"

namespace lamn::score {

BFamily b_family(const model::ModelSpec& spec, const VectorXd& z0, const VectorXd& theta) {
  const int kappa = spec.kappa;
  const int q2 = spec.m - kappa;
  const MatrixXd a = spec.a_tilde(z0, theta);
  const MatrixXd apinv = linalg::pinv(a);
  const MatrixXd g1 = model::grad1_b_check(spec, z0);
  linalg::SymPd gtg(g1.transpose() * g1);
  if (gtg.degraded())
    throw NumericalError("b_family: grad1 b_check is rank deficient");
  const MatrixXd gtg_inv = gtg.inverse();

  BFamily fam;
  fam.z0 = z0;
  fam.theta = theta;
  fam.B.reserve(static_cast<size_t>(spec.d));
  fam.trace.reserve(static_cast<size_t>(spec.d));
  for (int i = 0; i < spec.d; ++i) {
    const MatrixXd da = model::theta_derivative(spec, "a_tilde", z0, theta, i);
    const MatrixXd daap = da * apinv;  // kappa x kappa
    MatrixXd b = MatrixXd::Zero(spec.m, spec.m);
    b.topLeftCorner(kappa, kappa) = daap;
    if (q2 > 0)
      b.bottomRightCorner(q2, q2) = g1.transpose() * daap * g1 * gtg_inv;
    fam.trace.push_back(b.trace());
    fam.B.push_back(std::move(b));
  }
  return fam;
}

double lstat(const VectorXd& u, const VectorXd& z0, const VectorXd& theta,
             const model::ModelSpec& spec, int i) {
  const auto kt = blockcov::ktilde_build(spec, z0, theta);
  const auto fam = b_family(spec, z0, theta);
  return u.dot(fam.B[static_cast<size_t>(i)].transpose() * (kt.inverse * u)) -
         fam.trace[static_cast<size_t>(i)];
}

namespace {

// Phi_i K for all i; gamma_{ij} = 2 tr((Phi_i K)(Phi_j K))
MatrixXd gamma_from(const blockcov::KTilde& kt, const BFamily& fam) {
  const int d = static_cast<int>(fam.B.size());
  std::vector<MatrixXd> phik(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    const MatrixXd& b = fam.B[static_cast<size_t>(i)];
    const MatrixXd phi = 0.5 * (b.transpose() * kt.inverse + kt.inverse * b);
    phik[static_cast<size_t>(i)] = phi * kt.dense;
  }
  MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      g(i, j) = 2.0 * (phik[static_cast<size_t>(i)] * phik[static_cast<size_t>(j)]).trace();
      g(j, i) = g(i, j);
    }
  return g;
}

}  // namespace

MatrixXd gamma_block(const VectorXd& z0, const VectorXd& theta0, const model::ModelSpec& spec) {
  const auto kt = blockcov::ktilde_build(spec, z0, theta0);
  const auto fam = b_family(spec, z0, theta0);
  return gamma_from(kt, fam);
}

Expansion expansion_complete(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                             const VectorXd& theta0, const VectorXd& h) {
  if (obs.kind != model::SchemeKind::Complete)
    throw ConfigError("expansion_complete: needs complete observations");
  if (!spec.theta_box.contains(theta0)) throw ConfigError("expansion_complete: theta0 outside theta_box");
  const int n = obs.n;
  const int d = spec.d;
  const MatrixXd incr = sim::normalized_increments_complete(obs, spec);

  std::vector<VectorXd> gs(static_cast<size_t>(n));
  std::vector<MatrixXd> gams(static_cast<size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const VectorXd z0 = obs.rows.row(j - 1).transpose();
    const auto kt = blockcov::ktilde_build(spec, z0, theta0);
    const auto fam = b_family(spec, z0, theta0);
    const VectorXd x = incr.row(j - 1).transpose();
    const VectorXd kx = kt.inverse * x;
    VectorXd g(d);
    for (int i = 0; i < d; ++i)
      g(i) = x.dot(fam.B[static_cast<size_t>(i)].transpose() * kx) - fam.trace[static_cast<size_t>(i)];
    gs[static_cast<size_t>(j - 1)] = std::move(g);
    gams[static_cast<size_t>(j - 1)] = gamma_from(kt, fam);
  }

  Expansion out;
  out.score_sum = linalg::pairwise_sum(std::move(gs)) / std::sqrt(static_cast<double>(n));
  out.t_sum = linalg::pairwise_sum(std::move(gams)) / static_cast<double>(n);
  out.lambda_hat = h.dot(out.score_sum) - 0.5 * h.dot(out.t_sum * h);
  return out;
}

Expansion expansion_diffusive_part(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                                   const VectorXd& theta0, const VectorXd& h) {
  if (obs.kind != model::SchemeKind::Complete)
    throw ConfigError("expansion_diffusive_part: needs complete observations");
  const int n = obs.n;
  const int d = spec.d;
  const MatrixXd incr = sim::normalized_increments_complete(obs, spec);

  std::vector<VectorXd> gs(static_cast<size_t>(n));
  std::vector<MatrixXd> gams(static_cast<size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const VectorXd z0 = obs.rows.row(j - 1).transpose();
    const MatrixXd a = spec.a_tilde(z0, theta0);
    linalg::SymPd aat(a * a.transpose());
    const MatrixXd apinv = linalg::pinv(a);
    const VectorXd x = incr.row(j - 1).head(spec.kappa);
    const VectorXd kx = aat.solve(x);
    VectorXd g(d);
    std::vector<MatrixXd> msym(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
      const MatrixXd bt = model::theta_derivative(spec, "a_tilde", z0, theta0, i) * apinv;
      g(i) = x.dot(bt.transpose() * kx) - bt.trace();
      msym[static_cast<size_t>(i)] = aat.solve(bt * (a * a.transpose()) + (a * a.transpose()) * bt.transpose());
    }
    MatrixXd gam(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = i; k < d; ++k) {
        gam(i, k) = 0.5 * (msym[static_cast<size_t>(i)] * msym[static_cast<size_t>(k)]).trace();
        gam(k, i) = gam(i, k);
      }
    gs[static_cast<size_t>(j - 1)] = std::move(g);
    gams[static_cast<size_t>(j - 1)] = std::move(gam);
  }

  Expansion out;
  out.score_sum = linalg::pairwise_sum(std::move(gs)) / std::sqrt(static_cast<double>(n));
  out.t_sum = linalg::pairwise_sum(std::move(gams)) / static_cast<double>(n);
  out.lambda_hat = h.dot(out.score_sum) - 0.5 * h.dot(out.t_sum * h);
  return out;
}

ScoreBlock u_v_stats(const sim::PartialBlock& block, int block_index, const model::ModelSpec& spec,
                     const model::ProjectionFrame& frame, const VectorXd& theta0, int e_n) {
  VectorXd z = spec.rotated_initial();
  z.head(spec.kappa) = block.ydot;
  const MatrixXd a = spec.a_tilde(z, theta0);
  const MatrixXd A = a * a.transpose();
  const bool first = (block_index == 0);
  const MatrixXd psi = blockcov::psi_observed(A, frame, e_n, first);
  linalg::SymPd f(psi);
  if (f.cond() > 1e12)
    throw NumericalError("u_v_stats: block covariance condition number above 1e12 at block " +
                         std::to_string(block_index));

  ScoreBlock out;
  out.j = block_index;
  out.ydot = block.ydot;
  out.u.resize(spec.d);
  out.v.resize(spec.d, spec.d);
  const VectorXd px = f.solve(block.xprime);
  std::vector<MatrixXd> pinvpd(static_cast<size_t>(spec.d));
  for (int i = 0; i < spec.d; ++i) {
    const MatrixXd dA = model::diffusion_matrix_derivative(spec, z, theta0, i);
    const MatrixXd pd = blockcov::psi_observed(dA, frame, e_n, first);
    pinvpd[static_cast<size_t>(i)] = f.solve(pd);
    // U_i = 1/2 ( x^T psi^{-1} psi(dA) psi^{-1} x - tr(psi^{-1} psi(dA)) );
    // mean zero under the block law, the theta-score of the Gaussian block density
    out.u(i) = 0.5 * (px.dot(pd * px) - pinvpd[static_cast<size_t>(i)].trace());
  }
  for (int i = 0; i < spec.d; ++i)
    for (int j = i; j < spec.d; ++j) {
      out.v(i, j) = 0.5 * (pinvpd[static_cast<size_t>(i)] * pinvpd[static_cast<size_t>(j)]).trace();
      out.v(j, i) = out.v(i, j);
    }
  return out;
}

Expansion expansion_partial(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                            const model::ProjectionFrame& frame, const VectorXd& theta0,
                            const VectorXd& h, int e_n) {
  if (obs.kind != model::SchemeKind::Partial)
    throw ConfigError("expansion_partial: needs partial observations");
  const auto layout = sim::BlockLayout::make(obs.n, e_n);
  const auto blocks = sim::partial_blocks(obs, layout, spec, frame);
  const double n = static_cast<double>(obs.n);

  std::vector<VectorXd> us(blocks.size());
  std::vector<MatrixXd> vs(blocks.size());
  for (size_t j = 0; j < blocks.size(); ++j) {
    auto sb = u_v_stats(blocks[j], static_cast<int>(j), spec, frame, theta0, e_n);
    us[j] = std::move(sb.u);
    vs[j] = std::move(sb.v);
  }

  Expansion out;
  out.score_sum = linalg::pairwise_sum(std::move(us)) / std::sqrt(n);
  out.t_sum = linalg::pairwise_sum(std::move(vs)) / n;
  out.lambda_hat = h.dot(out.score_sum) - 0.5 * h.dot(out.t_sum * h);
  return out;
}

}  // namespace lamn::score
