#include "lamn/stats.hpp"

#include <algorithm>
#include <cmath>

#include "lamn/linalg.hpp"

namespace lamn::stats {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw ConfigError("mean of empty sample");
  return linalg::pairwise_sum(xs) / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw ConfigError("variance needs at least two points");
  const double m = mean(xs);
  std::vector<double> sq(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
  return linalg::pairwise_sum(std::move(sq)) / static_cast<double>(xs.size() - 1);
}

double se_mean(const std::vector<double>& xs) {
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic_normal(std::vector<double> xs) {
  if (xs.empty()) throw ConfigError("KS statistic of empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  return d;
}

double ks_pvalue(double ks_stat, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * ks_stat;
  if (lam < 1e-8) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * lam * lam * k * k);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace lamn::stats
