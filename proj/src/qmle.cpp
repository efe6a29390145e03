#include "lamn/qmle.hpp"

#include <cmath>

#include "lamn/blockcov.hpp"
#include "lamn/information.hpp"
#include "lamn/linalg.hpp"
#include "lamn/parallel.hpp"
#include "lamn/rng.hpp"
#include "lamn/score.hpp"

namespace lamn::qmle {

namespace {

int resolve_en(const sim::ObservationSet& obs, int e_n) {
  return e_n > 0 ? e_n : sim::BlockLayout::default_e_n(obs.n);
}

struct PartialData {
  sim::BlockLayout layout;
  model::ProjectionFrame frame;
  std::vector<sim::PartialBlock> blocks;
};

PartialData partial_data(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                         const model::SchemeSpec& scheme, int e_n) {
  PartialData pd{sim::BlockLayout::make(obs.n, resolve_en(obs, e_n)),
                 model::build_frame(scheme, spec.kappa),
                 {}};
  pd.blocks = sim::partial_blocks(obs, pd.layout, spec, pd.frame);
  return pd;
}

}  // namespace

double quasi_nll(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                 const model::SchemeSpec& scheme, const VectorXd& theta, int e_n) {
  if (!spec.theta_box.contains(theta)) throw ConfigError("quasi_nll: theta outside theta_box");
  if (obs.kind == model::SchemeKind::Complete) {
    const MatrixXd incr = sim::normalized_increments_complete(obs, spec);
    std::vector<double> terms(static_cast<size_t>(obs.n));
    for (int j = 1; j <= obs.n; ++j) {
      const VectorXd z0 = obs.rows.row(j - 1).transpose();
      const auto kt = blockcov::ktilde_build(spec, z0, theta);
      const VectorXd x = incr.row(j - 1).transpose();
      terms[static_cast<size_t>(j - 1)] = kt.log_det + x.dot(kt.inverse * x);
    }
    return linalg::pairwise_sum(std::move(terms));
  }
  const auto pd = partial_data(obs, spec, scheme, e_n);
  std::vector<double> terms(pd.blocks.size());
  for (size_t j = 0; j < pd.blocks.size(); ++j) {
    VectorXd z = spec.rotated_initial();
    z.head(spec.kappa) = pd.blocks[j].ydot;
    const MatrixXd a = spec.a_tilde(z, theta);
    const MatrixXd psi = blockcov::psi_observed(a * a.transpose(), pd.frame, pd.layout.e_n, j == 0);
    linalg::SymPd f(psi);
    if (f.cond() > 1e12)
      throw NumericalError("quasi_nll: block covariance ill-conditioned at block " + std::to_string(j));
    terms[j] = f.log_det() + pd.blocks[j].xprime.dot(VectorXd(f.solve(pd.blocks[j].xprime)));
  }
  return linalg::pairwise_sum(std::move(terms));
}

VectorXd quasi_nll_gradient(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                            const model::SchemeSpec& scheme, const VectorXd& theta, int e_n) {
  if (obs.kind == model::SchemeKind::Complete) {
    const MatrixXd incr = sim::normalized_increments_complete(obs, spec);
    std::vector<VectorXd> terms(static_cast<size_t>(obs.n));
    for (int j = 1; j <= obs.n; ++j) {
      const VectorXd z0 = obs.rows.row(j - 1).transpose();
      const auto kt = blockcov::ktilde_build(spec, z0, theta);
      const auto fam = score::b_family(spec, z0, theta);
      const VectorXd x = incr.row(j - 1).transpose();
      const VectorXd kx = kt.inverse * x;
      VectorXd l(spec.d);
      for (int i = 0; i < spec.d; ++i)
        l(i) = x.dot(fam.B[static_cast<size_t>(i)].transpose() * kx) - fam.trace[static_cast<size_t>(i)];
      terms[static_cast<size_t>(j - 1)] = std::move(l);
    }
    return -2.0 * linalg::pairwise_sum(std::move(terms));
  }
  const auto pd = partial_data(obs, spec, scheme, e_n);
  std::vector<VectorXd> terms(pd.blocks.size());
  for (size_t j = 0; j < pd.blocks.size(); ++j)
    terms[j] = score::u_v_stats(pd.blocks[j], static_cast<int>(j), spec, pd.frame, theta,
                                pd.layout.e_n)
                   .u;
  return -2.0 * linalg::pairwise_sum(std::move(terms));
}

namespace {

// golden-section minimization on [lo, hi]
std::pair<double, double> golden(const std::function<double(double)>& f, double lo, double hi,
                                 double tol, int max_iter, int& iters) {
  constexpr double R = 0.6180339887498949;
  constexpr double C = 1.0 - R;
  double x1 = lo + C * (hi - lo);
  double x2 = lo + R * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  iters = 0;
  while (std::abs(hi - lo) > tol * (std::abs(x1) + std::abs(x2)) && iters < max_iter) {
    ++iters;
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = lo + C * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + R * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

EstimateReport nelder_mead(const std::function<double(const VectorXd&)>& f,
                           const model::ThetaBox& box, const VectorXd& init,
                           const EstimateOptions& opt) {
  const int d = static_cast<int>(init.size());
  std::vector<VectorXd> pts(static_cast<size_t>(d) + 1);
  std::vector<double> vals(static_cast<size_t>(d) + 1);
  pts[0] = box.clamp(init, 1e-6);
  for (int i = 0; i < d; ++i) {
    VectorXd p = pts[0];
    p(i) += 0.1 * (box.hi(i) - box.lo(i));
    pts[static_cast<size_t>(i) + 1] = box.clamp(p, 1e-6);
  }
  for (size_t i = 0; i < pts.size(); ++i) vals[i] = f(pts[i]);

  auto order = [&]() {
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j)
        if (vals[j] < vals[i]) {
          std::swap(vals[i], vals[j]);
          std::swap(pts[i], pts[j]);
        }
  };
  order();
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    double diam = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) diam = std::max(diam, (pts[i] - pts[0]).norm());
    if (diam < opt.tol) break;
    VectorXd centroid = VectorXd::Zero(d);
    for (size_t i = 0; i < pts.size() - 1; ++i) centroid += pts[i];
    centroid /= static_cast<double>(d);
    const size_t worst = pts.size() - 1;
    auto eval = [&](double coef) {
      VectorXd p = box.clamp(centroid + coef * (centroid - pts[worst]), 1e-6);
      return std::make_pair(p, f(p));
    };
    auto [xr, fr] = eval(1.0);
    if (fr < vals[0]) {
      auto [xe, fe] = eval(2.0);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[worst - 1]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      auto [xc, fc] = eval(-0.5);
      if (fc < vals[worst]) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (size_t i = 1; i < pts.size(); ++i) {
          pts[i] = box.clamp(pts[0] + 0.5 * (pts[i] - pts[0]), 1e-6);
          vals[i] = f(pts[i]);
        }
      }
    }
    order();
  }
  EstimateReport rep;
  rep.theta_hat = pts[0];
  rep.objective = vals[0];
  rep.iterations = it;
  rep.converged = it < opt.max_iter;
  return rep;
}

}  // namespace

EstimateReport estimate(const sim::ObservationSet& obs, const model::ModelSpec& spec,
                        const model::SchemeSpec& scheme, const VectorXd& theta_init,
                        const EstimateOptions& options) {
  if (!spec.theta_box.contains(theta_init)) throw ConfigError("estimate: theta_init outside theta_box");
  {
    // no diffusion, no information about theta
    const MatrixXd a0 = spec.a_tilde(spec.rotated_initial(), theta_init);
    if (a0.cwiseAbs().maxCoeff() < 1e-14)
      throw ConfigError("estimate: diffusion coefficient vanishes at theta_init, nothing to estimate");
  }
  const int e_n = options.e_n;
  auto obj = [&](const VectorXd& th) { return quasi_nll(obs, spec, scheme, th, e_n); };

  if (spec.d == 1) {
    const double margin = 1e-6 * (spec.theta_box.hi(0) - spec.theta_box.lo(0));
    int iters = 0;
    auto [x, fx] = golden([&](double t) { return obj(VectorXd::Constant(1, t)); },
                          spec.theta_box.lo(0) + margin, spec.theta_box.hi(0) - margin,
                          options.tol, options.max_iter, iters);
    // Newton polish on the analytic score
    double theta = x;
    double best = fx;
    for (int k = 0; k < 3; ++k) {
      const VectorXd th = VectorXd::Constant(1, theta);
      const double s = quasi_nll_gradient(obs, spec, scheme, th, e_n)(0);
      const double hstep = 1e-5 * std::abs(theta);
      const double sp = quasi_nll_gradient(obs, spec, scheme, VectorXd::Constant(1, theta + hstep), e_n)(0);
      const double sm = quasi_nll_gradient(obs, spec, scheme, VectorXd::Constant(1, theta - hstep), e_n)(0);
      const double ds = (sp - sm) / (2.0 * hstep);
      if (!(std::abs(ds) > 0.0)) break;
      double cand = theta - s / ds;
      cand = spec.theta_box.clamp(VectorXd::Constant(1, cand), 1e-6)(0);
      const double fc = obj(VectorXd::Constant(1, cand));
      if (fc <= best) {
        theta = cand;
        best = fc;
      } else {
        break;  // keep the golden-section point; step rejected
      }
      ++iters;
    }
    EstimateReport rep;
    rep.theta_hat = VectorXd::Constant(1, theta);
    rep.objective = best;
    rep.iterations = iters;
    rep.converged = iters < options.max_iter;
    return rep;
  }
  return nelder_mead(obj, spec.theta_box, theta_init, options);
}

StudyReport estimator_study(const model::ModelSpec& spec, const model::SchemeSpec& scheme,
                            const VectorXd& theta0, int n, int M, std::uint64_t seed,
                            int substeps, int e_n, int threads) {
  if (M < 2) throw ConfigError("estimator_study: M must be >= 2");
  const int nthreads = threads > 0 ? threads : parallel::default_threads();
  const int en = e_n > 0 ? e_n : sim::BlockLayout::default_e_n(n);

  struct Rep {
    VectorXd theta_hat;
    MatrixXd gamma;
    bool ok = false;
  };
  std::vector<Rep> reps(static_cast<size_t>(M));
  parallel::for_index(static_cast<size_t>(M), nthreads, [&](size_t i) {
    try {
      const auto path = sim::simulate_path(spec, theta0, n, substeps, rng::derive_seed(seed, i));
      const auto obs = sim::observe(path, scheme, spec);
      EstimateOptions opt;
      opt.e_n = en;
      const auto est = estimate(obs, spec, scheme, spec.theta_box.center(), opt);
      Rep r;
      r.theta_hat = est.theta_hat;
      int stride = 1;
      while (path.substeps % (2 * stride) == 0 &&
             static_cast<long>(path.n) * (path.substeps / (2 * stride)) >= 3200)
        stride *= 2;
      const sim::PathSample coarse = sim::decimate(path, stride);
      if (scheme.kind == model::SchemeKind::Complete) {
        r.gamma = info::gamma_complete(coarse, spec, theta0).gamma;
      } else if (model::builtin_has_closed_form_g(spec.name)) {
        r.gamma = info::gamma_closed_form(spec.name, coarse, spec, theta0).gamma;
      } else {
        const auto frame = model::build_frame(scheme, spec.kappa);
        r.gamma = info::gamma_partial_psi_limit(coarse, spec, frame, theta0, {100, 200}).gamma;
      }
      r.ok = est.converged;
      reps[i] = std::move(r);
    } catch (const std::exception&) {
      reps[i].ok = false;
    }
  });

  std::vector<VectorXd> hats;
  std::vector<MatrixXd> gammas;
  int failures = 0;
  for (const auto& r : reps) {
    if (r.ok) {
      hats.push_back(r.theta_hat);
      gammas.push_back(r.gamma);
    } else {
      ++failures;
    }
  }
  if (failures > std::max(1, M / 100))
    throw NumericalError("estimator_study: more than 1% of replications failed (" +
                         std::to_string(failures) + "/" + std::to_string(M) + ")");

  const int d = spec.d;
  const double count = static_cast<double>(hats.size());
  StudyReport rep;
  rep.M = M;
  rep.n = n;
  rep.failures = failures;
  rep.theta_hats.resize(static_cast<Eigen::Index>(hats.size()), d);
  for (size_t i = 0; i < hats.size(); ++i) rep.theta_hats.row(static_cast<Eigen::Index>(i)) = hats[i].transpose();
  rep.mean_theta = linalg::pairwise_sum(hats) / count;

  std::vector<MatrixXd> outer(hats.size());
  const double sn = std::sqrt(static_cast<double>(n));
  for (size_t i = 0; i < hats.size(); ++i) {
    const VectorXd dev = sn * (hats[i] - theta0);
    outer[i] = dev * dev.transpose();
  }
  const VectorXd mean_dev = sn * (rep.mean_theta - theta0);
  rep.scaled_cov = (linalg::pairwise_sum(std::move(outer)) - count * mean_dev * mean_dev.transpose()) /
                   (count - 1.0);
  const MatrixXd gbar = linalg::pairwise_sum(std::move(gammas)) / count;
  rep.reference_inverse = linalg::SymPd(gbar).inverse();
  return rep;
}

}  // namespace lamn::qmle
