#include "psq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace psq {

double ks_critical_001(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

KsResult ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
    if (samples.size() < 20) throw std::domain_error("ks_statistic: need at least 20 samples");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, x.size(), ks_critical_001(x.size())};
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::domain_error("median of an empty sample");
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

ConfidenceInterval bootstrap_mean_ci(std::span<const double> values, double level, int resamples, Stream rng) {
    if (values.empty()) throw std::domain_error("bootstrap: empty sample");
    if (!(level > 0.0 && level < 1.0) || resamples < 1) throw std::domain_error("bootstrap: bad level or resample count");
    const std::size_t n = values.size();
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))];
        m = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double tail = 0.5 * (1.0 - level);
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(means.size() - 1);
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(i);
        return i + 1 < means.size() ? means[i] * (1.0 - frac) + means[i + 1] * frac : means[i];
    };
    return {mean(values), quantile(tail), quantile(1.0 - tail)};
}

}  // namespace psq
