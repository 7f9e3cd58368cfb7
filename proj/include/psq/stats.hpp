#pragma once

#include <functional>
#include <span>
#include <vector>

#include "psq/rng.hpp"

namespace psq {

struct KsResult {
    double statistic;
    std::size_t n;
    double critical;  // asymptotic critical value at level 0.01
    bool passed() const { return statistic <= critical; }
};

/// One-sample Kolmogorov-Smirnov statistic sup_x |F_N(x) - cdf(x)|.
KsResult ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// 1.628 / sqrt(n).
double ks_critical_001(std::size_t n);

struct ConfidenceInterval {
    double mean;
    double lower;
    double upper;
};

/// Percentile bootstrap interval for the mean.
ConfidenceInterval bootstrap_mean_ci(std::span<const double> values, double level, int resamples, Stream rng);

double mean(std::span<const double> values);
double median(std::vector<double> values);

}  // namespace psq
