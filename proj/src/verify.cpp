#include "lamn/verify.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "lamn/blockcov.hpp"
#include "lamn/information.hpp"
#include "lamn/lamn_mc.hpp"
#include "lamn/linalg.hpp"
#include "lamn/qmle.hpp"
#include "lamn/rng.hpp"
#include "lamn/runner.hpp"
#include "lamn/score.hpp"
#include "lamn/simulate.hpp"
#include "lamn/stats.hpp"

namespace lamn::verify {

namespace {

struct Ctx {
  CriterionResult res;
  std::ostringstream line;

  void check(bool ok, const std::string& what) {
    res.lines.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
    res.pass = res.pass && ok;
  }
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

MatrixXd random_spd(std::mt19937_64& eng, int n, double ridge = 0.5) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = g(eng);
  return r * r.transpose() + ridge * MatrixXd::Identity(n, n);
}

MatrixXd random_mat(std::mt19937_64& eng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd r(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r(i, j) = g(eng);
  return r;
}

// ---- criterion 1: Kronecker identity for the integrated scheme ----
CriterionResult c1_kronecker(int) {
  Ctx c;
  c.res = {1, "psi^{2,2}(A) = V_L (x) A for the integrated scheme", true, {}, 0.0};
  std::mt19937_64 eng(11);
  const std::vector<int> Ls = {3, 10, 50, 100};
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int kappa = 1 + trial % 3;
    const auto scheme =
        model::SchemeSpec::partial(MatrixXd::Zero(kappa, kappa), MatrixXd::Identity(kappa, kappa));
    const auto frame = model::build_frame(scheme, kappa);
    const MatrixXd A = random_spd(eng, kappa);
    for (int L : Ls) {
      const MatrixXd psi = blockcov::psi_build(A, frame, 2, 2, L).dense;
      const MatrixXd kron = linalg::kron(blockcov::v_matrix(L), A);
      worst = std::max(worst, (psi - kron).cwiseAbs().maxCoeff());
    }
  }
  c.check(worst < 1e-12, "max |psi - V_L (x) A| = " + num(worst) + " < 1e-12 (20 SPD draws, L in {3,10,50,100})");
  return c.res;
}

// ---- criterion 2: partitioned-matrix lemma ----
CriterionResult c2_schur(int) {
  Ctx c;
  c.res = {2, "partitioned-matrix identity", true, {}, 0.0};
  std::mt19937_64 eng(22);
  std::uniform_int_distribution<int> d1(1, 6), d2(1, 5);
  double worst = 0.0, worst_unit = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n1 = d1(eng), n2 = d2(eng);
    const MatrixXd big = random_spd(eng, n1 + n2, 1.0);
    const MatrixXd A1 = big.topLeftCorner(n1, n1);
    const MatrixXd B = big.topRightCorner(n1, n2);
    const MatrixXd C = big.bottomRightCorner(n2, n2);
    const MatrixXd A2 = random_mat(eng, n1, n1);
    const auto out = blockcov::schur_quadratic(A1, A2, B, C);
    worst = std::max(worst, out.discrepancy);
    const auto unit = blockcov::schur_quadratic(A1, A1, B, C);
    worst_unit = std::max(
        worst_unit, (unit.left - MatrixXd::Identity(n1, n1)).cwiseAbs().maxCoeff());
  }
  c.check(worst < 1e-10, "left/right agreement " + num(worst) + " < 1e-10 (100 partitions)");
  c.check(worst_unit < 1e-10, "A1 = A2 gives the unit matrix, err " + num(worst_unit) + " < 1e-10");
  return c.res;
}

// ---- criterion 3: K-tilde identities per builtin ----
CriterionResult c3_ktilde(int) {
  Ctx c;
  c.res = {3, "K-tilde blockwise inverse, determinant, and dK = BK + KB^T", true, {}, 0.0};
  std::mt19937_64 eng(33);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& name : model::builtin_names()) {
    const auto built = model::builtin_model(name);
    const auto& spec = built.spec;
    double w_inv = 0.0, w_det = 0.0, w_lyap = 0.0;
    for (int probe = 0; probe < 50; ++probe) {
      VectorXd z = spec.rotated_initial();
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += 0.3 * g(eng);
      VectorXd theta(spec.d);
      for (int i = 0; i < spec.d; ++i) theta(i) = 0.5 + 2.0 * std::abs(std::sin(g(eng)));
      const auto kt = blockcov::ktilde_build(spec, z, theta);

      const MatrixXd dense_inv = Eigen::PartialPivLU<MatrixXd>(kt.dense).inverse();
      w_inv = std::max(w_inv, (kt.inverse - dense_inv).cwiseAbs().maxCoeff() /
                                  std::max(1.0, dense_inv.cwiseAbs().maxCoeff()));

      const double det_dense = kt.dense.determinant();
      const double det_prod = kt.aat.determinant() * kt.S.determinant();
      w_det = std::max(w_det, std::abs(det_dense - det_prod) / std::max(1e-300, std::abs(det_prod)));

      // dK/dtheta_i vs B_i K + K B_i^T (central difference in theta)
      const auto fam = score::b_family(spec, z, theta);
      for (int i = 0; i < spec.d; ++i) {
        const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, theta(i));
        VectorXd tp = theta, tm = theta;
        tp(i) += h;
        tm(i) -= h;
        const MatrixXd fd =
            (blockcov::ktilde_build(spec, z, tp).dense - blockcov::ktilde_build(spec, z, tm).dense) /
            (2.0 * h);
        const MatrixXd lyap = fam.B[static_cast<size_t>(i)] * kt.dense +
                              kt.dense * fam.B[static_cast<size_t>(i)].transpose();
        w_lyap = std::max(w_lyap,
                          (fd - lyap).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()));
      }
    }
    c.check(w_inv < 1e-10, name + ": blockwise inverse vs dense, rel " + num(w_inv) + " < 1e-10");
    c.check(w_det < 1e-9, name + ": det(K) = det(aa^T) det(S), rel " + num(w_det) + " < 1e-9");
    c.check(w_lyap < 1e-9, name + ": dK = BK + KB^T vs finite differences, rel " + num(w_lyap) + " < 1e-9");
  }
  return c.res;
}

// ---- criterion 4: information-density limit, scalar integrated model ----
CriterionResult c4_c5_limit(int) {
  Ctx c;
  c.res = {4, "information limit: T_{k,l,L}/L -> 4 for the scalar integrated model", true, {}, 0.0};
  const auto built = model::builtin_model("integrated");
  const auto frame = model::build_frame(built.scheme, built.spec.kappa);
  const VectorXd theta0 = VectorXd::Ones(1);
  const VectorXd x = VectorXd::Ones(1);
  const std::vector<int> Ls = {50, 100, 200, 400};
  double worst_at_400 = 0.0;
  bool decreasing = true;
  for (int k = 1; k <= 2; ++k)
    for (int l = 1; l <= 2; ++l) {
      double prev = std::numeric_limits<double>::infinity();
      for (int L : Ls) {
        const double v = blockcov::t_trace(x, theta0, k, l, L, built.spec, frame)(0, 0) / L;
        const double resid = std::abs(v - 4.0);
        if (L == 400) worst_at_400 = std::max(worst_at_400, resid);
        if (resid > prev + 1e-12) decreasing = false;
        prev = resid;
      }
    }
  c.check(worst_at_400 < 0.04, "max |T/L - 4| at L=400 is " + num(worst_at_400) + " < 0.04 (all k,l)");
  c.check(decreasing, "residuals nonincreasing over L in {50,100,200,400}");
  return c.res;
}

// ---- criterion 5: closed-form information values ----
CriterionResult c5_info_values(int) {
  Ctx c;
  c.res = {5, "information values and ratios", true, {}, 0.0};
  const VectorXd theta0 = VectorXd::Ones(1);
  const auto lang = model::builtin_model("langevin");
  const auto path = sim::simulate_path(lang.spec, theta0, 64, 8, 505);
  const double gamma_c = info::gamma_complete(path, lang.spec, theta0).gamma(0, 0);
  c.check(std::abs(gamma_c - 4.0) < 1e-10, "Gamma(langevin, c = theta, theta0 = 1) = " + num(gamma_c) + " = 4");

  const auto integ = model::builtin_model("integrated");
  const double gamma_p = info::gamma_closed_form("integrated", path, integ.spec, theta0).gamma(0, 0);
  c.check(std::abs(gamma_p - 2.0) < 1e-10, "Gamma'(integrated) = " + num(gamma_p) + " = 2");
  c.check(std::abs(gamma_c / gamma_p - 2.0) < 1e-10, "joint/integrated ratio = " + num(gamma_c / gamma_p) + " = 2");

  const auto pv = model::builtin_model("langevin-partial-velocity", {{"kappa", 2}, {"kappa_prime", 1}});
  const double g_pv = info::gamma_closed_form("langevin-partial-velocity", path, pv.spec, theta0).gamma(0, 0);
  const double ratio = g_pv / (2.0 * pv.spec.kappa);
  c.check(std::abs(ratio - 1.5) < 1e-12,
          "partial-velocity ratio (kappa + kappa')/kappa = " + num(ratio) + " = 1.5");

  const auto fac = model::builtin_model("factor");
  const double g_fac = info::gamma_closed_form("factor", path, fac.spec, theta0).gamma(0, 0);
  c.check(std::abs(g_fac - 6.0) < 1e-10, "Gamma(factor, m = 3, f = e^theta) = " + num(g_fac) + " = 2m = 6");
  return c.res;
}

// ---- criterion 6: Gaussian-moment oracles ----
CriterionResult c6_moment_oracles(int) {
  Ctx c;
  c.res = {6, "Gaussian-moment oracles for L and U", true, {}, 0.0};
  constexpr int M = 100000;
  std::mt19937_64 eng(66);
  std::normal_distribution<double> g(0.0, 1.0);

  {  // L statistic under u ~ N(0, K), scalar langevin at theta0 = 1
    const auto built = model::builtin_model("langevin");
    const VectorXd theta0 = VectorXd::Ones(1);
    const VectorXd z0 = built.spec.rotated_initial();
    const auto kt = blockcov::ktilde_build(built.spec, z0, theta0);
    const auto fam = score::b_family(built.spec, z0, theta0);
    const MatrixXd gamma = score::gamma_block(z0, theta0, built.spec);
    const Eigen::LLT<MatrixXd> chol(kt.dense);
    std::vector<double> ls(M);
    for (int i = 0; i < M; ++i) {
      VectorXd zn(kt.dense.rows());
      for (Eigen::Index k = 0; k < zn.size(); ++k) zn(k) = g(eng);
      const VectorXd u = chol.matrixL() * zn;
      ls[static_cast<size_t>(i)] =
          u.dot(fam.B[0].transpose() * (kt.inverse * u)) - fam.trace[0];
    }
    const double m = stats::mean(ls);
    const double se = stats::se_mean(ls);
    c.check(std::abs(m) <= 3.0 * se, "E[L] = " + num(m) + " within 3 se (" + num(3.0 * se) + ")");
    const double var = stats::variance(ls);
    std::vector<double> sq(ls.size());
    for (size_t i = 0; i < ls.size(); ++i) sq[i] = (ls[i] - m) * (ls[i] - m);
    const double se_var = stats::se_mean(sq);
    c.check(std::abs(var - gamma(0, 0)) <= 3.0 * se_var,
            "Var(L) = " + num(var) + " vs gamma = " + num(gamma(0, 0)) + " within 3 se (" +
                num(3.0 * se_var) + ")");
  }

  {  // U statistic under X' ~ N(0, psi-hat), integrated scheme
    const auto built = model::builtin_model("integrated");
    const auto frame = model::build_frame(built.scheme, built.spec.kappa);
    const VectorXd theta0 = VectorXd::Ones(1);
    const int e_n = 7;
    VectorXd z = built.spec.rotated_initial();
    const MatrixXd a = built.spec.a_tilde(z, theta0);
    const MatrixXd A = a * a.transpose();
    const MatrixXd psi = blockcov::psi_observed(A, frame, e_n, false);
    const Eigen::LLT<MatrixXd> chol(psi);
    std::vector<double> us(M);
    sim::PartialBlock blk;
    blk.ydot = z.head(built.spec.kappa);
    for (int i = 0; i < M; ++i) {
      VectorXd zn(psi.rows());
      for (Eigen::Index k = 0; k < zn.size(); ++k) zn(k) = g(eng);
      blk.xprime = chol.matrixL() * zn;
      us[static_cast<size_t>(i)] =
          score::u_v_stats(blk, 1, built.spec, frame, theta0, e_n).u(0);
    }
    sim::PartialBlock ref;
    ref.ydot = z.head(built.spec.kappa);
    ref.xprime = VectorXd::Zero(psi.rows());
    const MatrixXd vmat = score::u_v_stats(ref, 1, built.spec, frame, theta0, e_n).v;
    const double m = stats::mean(us);
    const double se = stats::se_mean(us);
    c.check(std::abs(m) <= 3.0 * se, "E[U] = " + num(m) + " within 3 se (" + num(3.0 * se) + ")");
    const double var = stats::variance(us);
    std::vector<double> sq(us.size());
    for (size_t i = 0; i < us.size(); ++i) sq[i] = (us[i] - m) * (us[i] - m);
    const double se_var = stats::se_mean(sq);
    c.check(std::abs(var - vmat(0, 0)) <= 3.0 * se_var,
            "Var(U) = " + num(var) + " vs V = " + num(vmat(0, 0)) + " within 3 se (" +
                num(3.0 * se_var) + ")");
  }
  return c.res;
}

// ---- criterion 7: LAMN expansion, complete observations ----
CriterionResult c7_lamn_complete(int threads) {
  Ctx c;
  c.res = {7, "LAMN expansion, complete observations (n=400, M=5000)", true, {}, 0.0};
  const auto built = model::builtin_model("langevin");
  mc::LamnConfig cfg;
  cfg.theta0 = VectorXd::Ones(1);
  cfg.h = VectorXd::Ones(1);
  cfg.n = 400;
  cfg.M = 5000;
  cfg.substeps = 64;  // pinned: left-point Euler bias is O(1/S^2)
  cfg.seed = 20240807;
  cfg.threads = threads;
  cfg.var_rel_tol = 0.05;
  cfg.t_rel_tol = 0.02;
  cfg.run_ks = true;
  const auto rep = mc::run_lamn_mc(built.spec, built.scheme, cfg);
  for (const auto& cr : rep.criteria)
    c.check(cr.pass, cr.name + ": value " + num(cr.value) + ", target " + num(cr.target) +
                         ", tol " + num(cr.tolerance));
  return c.res;
}

// ---- criterion 8: LAMN expansion, partial observations ----
CriterionResult c8_lamn_partial(int threads) {
  Ctx c;
  c.res = {8, "LAMN expansion, partial observations (n=1000, e_n=7, M=3000)", true, {}, 0.0};
  const auto built = model::builtin_model("integrated");
  mc::LamnConfig cfg;
  cfg.theta0 = VectorXd::Ones(1);
  cfg.h = VectorXd::Ones(1);
  cfg.n = 1000;
  cfg.M = 3000;
  cfg.substeps = 64;  // pinned
  cfg.e_n = 7;
  cfg.seed = 20240808;
  cfg.threads = threads;
  cfg.var_rel_tol = 0.07;
  cfg.t_rel_tol = 0.02;
  cfg.run_ks = false;
  const auto rep = mc::run_lamn_mc(built.spec, built.scheme, cfg);
  for (const auto& cr : rep.criteria)
    c.check(cr.pass, cr.name + ": value " + num(cr.value) + ", target " + num(cr.target) +
                         ", tol " + num(cr.tolerance));
  return c.res;
}

// ---- criterion 9: estimator efficiency ----
CriterionResult c9_efficiency(int threads) {
  Ctx c;
  c.res = {9, "estimator efficiency vs the information bound", true, {}, 0.0};
  const VectorXd theta0 = VectorXd::Ones(1);
  {
    const auto built = model::builtin_model("langevin");
    const auto rep =
        qmle::estimator_study(built.spec, built.scheme, theta0, 400, 1000, 909, 16, 0, threads);
    const double v = rep.scaled_cov(0, 0);
    c.check(std::abs(v - 0.25) <= 0.1 * 0.25,
            "complete: Var(sqrt(n)(theta_hat - theta0)) = " + num(v) + " in 0.25 (1 +/- 10%)");
    const double bias = std::abs(rep.mean_theta(0) - 1.0);
    const double se = std::sqrt(v / rep.n / rep.M);
    c.check(bias <= 3.0 * se, "complete: |mean theta_hat - theta0| = " + num(bias) + " within 3 se");
  }
  {
    const auto built = model::builtin_model("integrated");
    const auto rep =
        qmle::estimator_study(built.spec, built.scheme, theta0, 1000, 1000, 910, 32, 7, threads);
    const double v = rep.scaled_cov(0, 0);
    c.check(std::abs(v - 0.5) <= 0.15 * 0.5,
            "integrated: Var(sqrt(n)(theta_hat - theta0)) = " + num(v) + " in 0.5 (1 +/- 15%)");
    const double bias = std::abs(rep.mean_theta(0) - 1.0);
    const double se = std::sqrt(v / rep.n / rep.M);
    c.check(bias <= 3.0 * se, "integrated: |mean theta_hat - theta0| = " + num(bias) + " within 3 se");
  }
  return c.res;
}

// ---- criterion 10: score / quasi-likelihood gradient link ----
CriterionResult c10_gradient_link(int) {
  Ctx c;
  c.res = {10, "d quasi_nll = -2 sum L vs finite differences", true, {}, 0.0};
  std::mt19937_64 eng(1010);
  std::uniform_real_distribution<double> unif(0.5, 2.5);
  for (const auto& name : model::builtin_names()) {
    const auto built = model::builtin_model(name);
    const VectorXd theta0 = VectorXd::Constant(built.spec.d, 1.0);
    const auto path = sim::simulate_path(built.spec, theta0, 60, 4, 4242);
    const auto obs = sim::observe(path, built.scheme, built.spec);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      VectorXd theta(built.spec.d);
      for (int i = 0; i < built.spec.d; ++i) theta(i) = unif(eng);
      const VectorXd grad = qmle::quasi_nll_gradient(obs, built.spec, built.scheme, theta, 5);
      for (int i = 0; i < built.spec.d; ++i) {
        // five-point stencil keeps the truncation error below the gate
        const double h = 1e-4 * (1.0 + std::abs(theta(i)));
        auto at = [&](double step) {
          VectorXd t = theta;
          t(i) += step;
          return qmle::quasi_nll(obs, built.spec, built.scheme, t, 5);
        };
        const double fd =
            (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
        worst = std::max(worst, std::abs(fd - grad(i)));
      }
    }
    c.check(worst < 1e-6, name + ": max |analytic - fd| = " + num(worst) + " < 1e-6 (20 thetas)");
  }
  return c.res;
}

// ---- criterion 11: byte-level reproducibility across runs and threads ----
CriterionResult c11_reproducibility(int) {
  Ctx c;
  c.res = {11, "identical manifests give identical bytes across runs and thread counts", true, {}, 0.0};
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "lamnlab_verify11";
  fs::remove_all(base);

  io::json cfg;
  cfg["command"] = "lamn-check";
  cfg["model"] = "integrated";
  cfg["n"] = 100;
  cfg["M"] = 600;
  cfg["substeps"] = 8;
  cfg["e_n"] = 4;
  cfg["seed"] = 99;
  cfg["h"] = 1.0;
  cfg["ks"] = false;
  cfg["quiet"] = true;
  cfg["var_rel_tol"] = 1.0;  // tolerance irrelevant here; bytes are the check
  cfg["t_rel_tol"] = 1.0;

  auto run_once = [&](const std::string& tag, int threads) {
    io::json c2 = cfg;
    c2["threads"] = threads;
    const fs::path dir = base / tag;
    run::dispatch(run::resolve_config(c2), dir);
    return dir;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  const auto d1 = run_once("a", 1);
  const auto d2 = run_once("b", 1);
  const auto d3 = run_once("c", 4);
  for (const char* f : {"manifest.json", "report.json", "lambda.csv"}) {
    const bool same_rerun = slurp(d1 / f) == slurp(d2 / f);
    const bool same_threads = slurp(d1 / f) == slurp(d3 / f);
    c.check(same_rerun && !slurp(d1 / f).empty(), std::string(f) + " identical across reruns");
    c.check(same_threads, std::string(f) + " identical across thread counts (1 vs 4)");
  }
  fs::remove_all(base);
  return c.res;
}

}  // namespace

int criterion_count() { return 11; }

CriterionResult run_criterion(int id, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult res;
  switch (id) {
    case 1: res = c1_kronecker(threads); break;
    case 2: res = c2_schur(threads); break;
    case 3: res = c3_ktilde(threads); break;
    case 4: res = c4_c5_limit(threads); break;
    case 5: res = c5_info_values(threads); break;
    case 6: res = c6_moment_oracles(threads); break;
    case 7: res = c7_lamn_complete(threads); break;
    case 8: res = c8_lamn_partial(threads); break;
    case 9: res = c9_efficiency(threads); break;
    case 10: res = c10_gradient_link(threads); break;
    case 11: res = c11_reproducibility(threads); break;
    default: throw ConfigError("verify: criterion id must be in 1..11");
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::vector<CriterionResult> run_all(int threads) {
  std::vector<CriterionResult> all;
  for (int id = 1; id <= criterion_count(); ++id) all.push_back(run_criterion(id, threads));
  return all;
}

}  // namespace lamn::verify
