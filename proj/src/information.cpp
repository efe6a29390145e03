#include "lamn/information.hpp"

#include <cmath>

#include "lamn/linalg.hpp"

namespace lamn::info {

namespace {

double min_eig_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return es.eigenvalues().minCoeff();
}

}  // namespace

std::pair<MatrixXd, MatrixXd> gamma_complete_terms(const sim::PathSample& path,
                                                   const model::ModelSpec& spec,
                                                   const VectorXd& theta0) {
  const Eigen::Index nsteps = path.states.rows() - 1;
  const int d = spec.d;
  std::vector<MatrixXd> diff(static_cast<size_t>(nsteps)), deg(static_cast<size_t>(nsteps));
  for (Eigen::Index t = 0; t < nsteps; ++t) {
    const VectorXd z = path.states.row(t).transpose();
    const MatrixXd a = spec.a_tilde(z, theta0);
    linalg::SymPd aat(a * a.transpose());
    const MatrixXd g1 = model::grad1_b_check(spec, z);
    const MatrixXd psi = g1.transpose() * (a * a.transpose()) * g1;
    linalg::SymPd psif(psi);
    if (psif.degraded())
      throw NumericalError("gamma_complete: Psi singular at t = " +
                           std::to_string(static_cast<double>(t) / static_cast<double>(nsteps)));
    std::vector<MatrixXd> m1(static_cast<size_t>(d)), m2(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
      const MatrixXd dA = model::diffusion_matrix_derivative(spec, z, theta0, i);
      m1[static_cast<size_t>(i)] = aat.solve(dA);
      m2[static_cast<size_t>(i)] = psif.solve(g1.transpose() * dA * g1);
    }
    MatrixXd t1(d, d), t2(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        t1(i, j) = 0.5 * (m1[static_cast<size_t>(i)] * m1[static_cast<size_t>(j)]).trace();
        t2(i, j) = 0.5 * (m2[static_cast<size_t>(i)] * m2[static_cast<size_t>(j)]).trace();
        t1(j, i) = t1(i, j);
        t2(j, i) = t2(i, j);
      }
    diff[static_cast<size_t>(t)] = std::move(t1);
    deg[static_cast<size_t>(t)] = std::move(t2);
  }
  const double inv = 1.0 / static_cast<double>(nsteps);
  return {linalg::pairwise_sum(std::move(diff)) * inv, linalg::pairwise_sum(std::move(deg)) * inv};
}

InfoMatrix gamma_complete(const sim::PathSample& path, const model::ModelSpec& spec,
                          const VectorXd& theta0) {
  auto [t1, t2] = gamma_complete_terms(path, spec, theta0);
  InfoMatrix out;
  out.gamma = t1 + t2;
  out.provenance = "path-quadrature";
  out.min_eig = min_eig_sym(out.gamma);
  return out;
}

InfoMatrix gamma_partial(const sim::PathSample& path, const model::ModelSpec& spec,
                         const GFunction& g, const std::string& provenance) {
  const Eigen::Index nsteps = path.states.rows() - 1;
  std::vector<MatrixXd> vals(static_cast<size_t>(nsteps));
  for (Eigen::Index t = 0; t < nsteps; ++t)
    vals[static_cast<size_t>(t)] = g(path.states.row(t).head(spec.kappa).transpose());
  InfoMatrix out;
  out.gamma = 0.5 * linalg::pairwise_sum(std::move(vals)) / static_cast<double>(nsteps);
  out.provenance = provenance;
  out.min_eig = min_eig_sym(out.gamma);
  return out;
}

InfoMatrix gamma_partial_psi_limit(const sim::PathSample& path, const model::ModelSpec& spec,
                                   const model::ProjectionFrame& frame, const VectorXd& theta0,
                                   const std::vector<int>& L_grid) {
  constexpr int kGrid = 64;
  if (spec.kappa == 1) {
    // 1-D state grid over the path range, linear interpolation between nodes
    const double lo = path.states.col(0).minCoeff();
    const double hi = path.states.col(0).maxCoeff();
    const double span = std::max(hi - lo, 1e-9);
    std::vector<MatrixXd> nodes(kGrid);
    for (int i = 0; i < kGrid; ++i) {
      VectorXd x(1);
      x(0) = lo + span * static_cast<double>(i) / (kGrid - 1);
      nodes[static_cast<size_t>(i)] = blockcov::g_limit(x, theta0, spec, frame, L_grid, 0.05).g;
    }
    GFunction g = [lo, span, nodes](const VectorXd& x) {
      const double u = std::clamp((x(0) - lo) / span, 0.0, 1.0) * (kGrid - 1);
      const int i0 = std::min(static_cast<int>(u), kGrid - 2);
      const double w = u - i0;
      return MatrixXd((1.0 - w) * nodes[static_cast<size_t>(i0)] +
                      w * nodes[static_cast<size_t>(i0 + 1)]);
    };
    return gamma_partial(path, spec, g, "psi-limit");
  }
  // kappa > 1: evaluate the limit at equally spaced path times
  const Eigen::Index nsteps = path.states.rows() - 1;
  std::vector<MatrixXd> vals(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    const Eigen::Index t = nsteps * i / kGrid;
    const VectorXd x = path.states.row(t).head(spec.kappa).transpose();
    vals[static_cast<size_t>(i)] = blockcov::g_limit(x, theta0, spec, frame, L_grid, 0.05).g;
  }
  InfoMatrix out;
  out.gamma = 0.5 * linalg::pairwise_sum(std::move(vals)) / static_cast<double>(kGrid);
  out.provenance = "psi-limit";
  out.min_eig = min_eig_sym(out.gamma);
  return out;
}

InfoMatrix gamma_closed_form(const std::string& model_name, const sim::PathSample& path,
                             const model::ModelSpec& spec, const VectorXd& theta0) {
  InfoMatrix out;
  out.gamma = model::builtin_closed_form_info(model_name, spec, path.states, theta0);
  out.provenance = "closed-form";
  out.min_eig = min_eig_sym(out.gamma);
  return out;
}

std::pair<bool, double> check_pd(const InfoMatrix& gamma) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gamma.gamma);
  const double mn = es.eigenvalues().minCoeff();
  return {mn > 0.0, mn};
}

}  // namespace lamn::info
