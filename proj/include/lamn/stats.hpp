#pragma once

#include <vector>

#include "lamn/common.hpp"

namespace lamn::stats {

double mean(const std::vector<double>& xs);
/// Unbiased sample variance (ddof = 1).
double variance(const std::vector<double>& xs);
/// Standard error of the mean: sd / sqrt(M).
double se_mean(const std::vector<double>& xs);

double normal_cdf(double x);

/// One-sample Kolmogorov-Smirnov statistic against the standard normal law.
double ks_statistic_normal(std::vector<double> xs);

/// Asymptotic Kolmogorov p-value with the usual finite-sample correction.
double ks_pvalue(double ks_stat, std::size_t n);

}  // namespace lamn::stats
