#pragma once

// Independent reference computations for the tests. Nothing in here calls the
// library's quadrature, metric or simulator internals.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

/// Composite 5-point Gauss-Legendre rule on `panels` equal panels.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels = 2000) {
    static constexpr std::array<double, 5> x = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                                0.9061798459386640};
    static constexpr std::array<double, 5> w = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                0.2369268850561891, 0.2369268850561891};
    const double h = (b - a) / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        for (std::size_t i = 0; i < 5; ++i) s += w[i] * f(c + 0.5 * h * x[i]);
    }
    return 0.5 * h * s;
}

/// Gauss-Legendre over [a, b] split at the given points (jumps or kinks of f).
inline double gauss_legendre_split(const std::function<double(double)>& f, double a, double b,
                                   std::vector<double> cuts, int panels = 2000) {
    std::vector<double> pts{a};
    std::sort(cuts.begin(), cuts.end());
    for (double c : cuts)
        if (c > a && c < b) pts.push_back(c);
    pts.push_back(b);
    double s = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) s += gauss_legendre(f, pts[i], pts[i + 1], panels);
    return s;
}

/// Excess cdf straight from its defining integral: beta * int_0^x tail(y) dy.
inline double excess_cdf(const std::function<double(double)>& tail, double beta, double x, int panels = 4000,
                         std::vector<double> cuts = {}) {
    return beta * gauss_legendre_split(tail, 0.0, x, std::move(cuts), panels);
}

inline double smooth(double u) {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    return 3 * u * u - 2 * u * u * u;
}

/// The metric d evaluated term by term for two atomic measures, with the
/// bump and ramp families written out independently.
inline double metric_atomic(const std::vector<std::pair<double, double>>& m1,
                            const std::vector<std::pair<double, double>>& m2, int k_max = 64) {
    auto integral = [](const std::vector<std::pair<double, double>>& m, auto&& g) {
        double s = 0;
        for (auto [x, w] : m) s += w * g(x);
        return s;
    };
    double series = 0;
    int k = 0;
    for (int q = 0; k < k_max; ++q) {
        const double width = std::pow(2.0, -q);
        for (int j = 0; j <= (1 << q) && k < k_max; ++j) {
            ++k;
            const double c = j * width;
            auto g = [&](double x) { return std::abs(x - c) < width ? 1.0 - smooth(std::abs(x - c) / width) : 0.0; };
            const double diff = std::abs(integral(m1, g) - integral(m2, g));
            series += std::pow(2.0, -k) * std::min(diff, 1.0);
        }
    }
    double far = 0;
    for (auto [x, w] : m1) far = std::max(far, x);
    for (auto [x, w] : m2) far = std::max(far, x);
    double sup = 0;
    for (int kk = 1; kk <= static_cast<int>(std::ceil(far)) + 5; ++kk) {
        auto h = [&](double x) { return smooth(x - (kk - 1)); };
        sup = std::max(sup, std::abs(integral(m1, h) - integral(m2, h)));
    }
    return series + sup;
}

/// FIFO (Lindley) workload at the grid times, same arrivals and services.
inline std::vector<double> fifo_workload(double initial_work, const std::vector<std::pair<double, double>>& arrivals,
                                         const std::vector<double>& grid) {
    std::vector<double> out;
    double w = initial_work, clock = 0;
    std::size_t next = 0;
    for (double g : grid) {
        while (next < arrivals.size() && arrivals[next].first <= g) {
            w = std::max(0.0, w - (arrivals[next].first - clock)) + arrivals[next].second;
            clock = arrivals[next].first;
            ++next;
        }
        out.push_back(std::max(0.0, w - (g - clock)));
    }
    return out;
}

/// E(t) = sup{i >= 0 : U_i <= t} by brute-force recount.
inline std::size_t count_arrivals(const std::vector<double>& epochs, double t) {
    std::size_t n = 0;
    for (double u : epochs)
        if (u <= t) ++n;
    return n;
}

}  // namespace oracle
