#include "lamn/simulate.hpp"

#include <cmath>

#include "lamn/linalg.hpp"
#include "lamn/rng.hpp"

namespace lamn::sim {

BlockLayout BlockLayout::make(int n, int e_n) {
  if (e_n < 3) throw ConfigError("BlockLayout: e_n must be >= 3");
  if (n < e_n + 2) throw ConfigError("BlockLayout: n too small for the block length");
  BlockLayout b;
  b.e_n = e_n;
  b.L_n = (n - 1) / e_n;
  return b;
}

int BlockLayout::default_e_n(int n) {
  return std::max(3, static_cast<int>(std::lround(std::log(static_cast<double>(n)))));
}

PathSample simulate_path(const model::ModelSpec& spec, const VectorXd& theta, int n,
                         int substeps, std::uint64_t seed) {
  if (n < 2) throw ConfigError("simulate_path: n must be >= 2");
  if (substeps < 1) throw ConfigError("simulate_path: substeps must be >= 1");
  if (!spec.theta_box.contains(theta)) throw ConfigError("simulate_path: theta outside theta_box");

  const int kappa = spec.kappa;
  const int q2 = spec.m - kappa;
  const int nsteps = n * substeps;
  const double dt = 1.0 / nsteps;
  const double sqdt = std::sqrt(dt);

  PathSample path;
  path.n = n;
  path.substeps = substeps;
  path.seed = seed;
  path.model = spec.name;
  path.theta = theta;
  path.states.resize(nsteps + 1, spec.m);

  rng::Engine eng = rng::make_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  VectorXd z = spec.rotated_initial();
  path.states.row(0) = z.transpose();
  VectorXd dw(spec.r);
  for (int t = 0; t < nsteps; ++t) {
    for (int l = 0; l < spec.r; ++l) dw(l) = sqdt * gauss(eng);
    const MatrixXd a = spec.a_tilde(z, theta);
    const VectorXd bt = spec.b_tilde(z, theta);
    const VectorXd bc = spec.b_check(z);
    z.head(kappa) += bt * dt + a * dw;
    if (q2 > 0) z.tail(q2) += bc * dt;
    if (!z.allFinite())
      throw NumericalError("simulate_path: non-finite state at fine step " + std::to_string(t + 1));
    path.states.row(t + 1) = z.transpose();
  }
  return path;
}

PathSample decimate(const PathSample& path, int stride) {
  if (stride <= 1) return path;
  if (path.substeps % stride != 0) throw ConfigError("decimate: stride must divide substeps");
  PathSample out;
  out.n = path.n;
  out.substeps = path.substeps / stride;
  out.seed = path.seed;
  out.model = path.model;
  out.theta = path.theta;
  const Eigen::Index rows = (path.states.rows() - 1) / stride + 1;
  out.states.resize(rows, path.states.cols());
  for (Eigen::Index i = 0; i < rows; ++i) out.states.row(i) = path.states.row(i * stride);
  return out;
}

ObservationSet observe(const PathSample& path, const model::SchemeSpec& scheme,
                       const model::ModelSpec& spec, int n) {
  const int nsteps = static_cast<int>(path.states.rows()) - 1;
  if (n < 1 || nsteps % n != 0)
    throw ConfigError("observe: n must divide the path's fine grid");
  const int stride = nsteps / n;

  ObservationSet obs;
  obs.n = n;
  obs.kind = scheme.kind;
  if (scheme.kind == model::SchemeKind::Complete) {
    obs.rows.resize(n + 1, spec.m);
    for (int k = 0; k <= n; ++k) obs.rows.row(k) = path.states.row(k * stride);
    return obs;
  }
  const auto frame = model::build_frame(scheme, spec.kappa);
  obs.rows.resize(n + 1, frame.q1 + frame.q2);
  for (int k = 0; k <= n; ++k) {
    const VectorXd z = path.states.row(k * stride).transpose();
    if (frame.q1 > 0) obs.rows.row(k).head(frame.q1) = (frame.Qt1 * z.head(spec.kappa)).transpose();
    obs.rows.row(k).tail(frame.q2) = z.tail(frame.q2).transpose();
  }
  return obs;
}

ObservationSet observe(const PathSample& path, const model::SchemeSpec& scheme,
                       const model::ModelSpec& spec) {
  return observe(path, scheme, spec, path.n);
}

MatrixXd normalized_increments_complete(const ObservationSet& obs, const model::ModelSpec& spec) {
  if (obs.kind != model::SchemeKind::Complete)
    throw ConfigError("normalized_increments_complete: needs a complete-scheme observation set");
  const int n = obs.n;
  const int kappa = spec.kappa;
  const int q2 = spec.m - kappa;
  const double sn = std::sqrt(static_cast<double>(n));
  const double n32 = static_cast<double>(n) * sn;

  MatrixXd incr(n, spec.m);
  for (int j = 1; j <= n; ++j) {
    const VectorXd prev = obs.rows.row(j - 1).transpose();
    const VectorXd cur = obs.rows.row(j).transpose();
    incr.row(j - 1).head(kappa) = sn * (cur.head(kappa) - prev.head(kappa)).transpose();
    if (q2 > 0) {
      const VectorXd drift = spec.b_check(prev) / static_cast<double>(n);
      incr.row(j - 1).tail(q2) = n32 * (cur.tail(q2) - prev.tail(q2) - drift).transpose();
    }
  }
  return incr;
}

std::vector<PartialBlock> partial_blocks(const ObservationSet& obs, const BlockLayout& layout,
                                         const model::ModelSpec& spec,
                                         const model::ProjectionFrame& frame) {
  if (obs.kind != model::SchemeKind::Partial)
    throw ConfigError("partial_blocks: needs a partial-scheme observation set");
  const int n = obs.n;
  const int en = layout.e_n;
  const int Ln = layout.L_n;
  const int q1 = frame.q1;
  const int q2 = frame.q2;
  const int q = q1 + q2;
  const double sn = std::sqrt(static_cast<double>(n));
  const double n32 = static_cast<double>(n) * sn;

  auto qy = [&](int k) { return obs.rows.row(k).head(q1).transpose(); };   // Qt1 Ytilde
  auto yc = [&](int k) { return obs.rows.row(k).tail(q2).transpose(); };   // Ycheck

  std::vector<PartialBlock> blocks;
  blocks.reserve(static_cast<size_t>(Ln));
  for (int j = 0; j < Ln; ++j) {
    const int t0 = j * en;
    PartialBlock blk;
    if (j == 0) {
      blk.ydot = spec.rotated_initial().head(spec.kappa);
    } else {
      // Q Ytilde recovered from the observed coordinates, unobserved part
      // reconstructed from the Ycheck difference over the previous interval
      VectorXd ydot = VectorXd::Zero(spec.kappa);
      if (q1 > 0) ydot += frame.Qt1.transpose() * qy(t0);
      ydot += frame.Qt3.transpose() *
              (static_cast<double>(n) * (frame.Qt3 * frame.Bpinv * (yc(t0) - yc(t0 - 1))));
      blk.ydot = ydot;
    }
    blk.xprime.resize(static_cast<Eigen::Index>(q) * en);
    for (int k = 1; k <= en; ++k) {
      const Eigen::Index at = static_cast<Eigen::Index>(q) * (k - 1);
      if (q1 > 0) blk.xprime.segment(at, q1) = sn * (qy(t0 + k) - qy(t0 + k - 1));
      if (k == 1) {
        const VectorXd drift = frame.Qt2 * blk.ydot / static_cast<double>(n);
        blk.xprime.segment(at + q1, q2) = n32 * (yc(t0 + 1) - yc(t0) - drift);
      } else {
        blk.xprime.segment(at + q1, q2) =
            n32 * (yc(t0 + k) - 2.0 * yc(t0 + k - 1) + yc(t0 + k - 2));
      }
    }
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

}  // namespace lamn::sim
