#include "psq/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace psq {
namespace {

struct Panel {
    double a, fa, m, fm, b, fb, whole;
};

double simpson_rec(const std::function<double(double)>& f, const Panel& p, double eps, int depth) {
    const double lm = 0.5 * (p.a + p.m);
    const double rm = 0.5 * (p.m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (p.m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    const double right = (p.b - p.m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    const double diff = left + right - p.whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
    return simpson_rec(f, {p.a, p.fa, lm, flm, p.m, p.fm, left}, 0.5 * eps, depth - 1) +
           simpson_rec(f, {p.m, p.fm, rm, frm, p.b, p.fb, right}, 0.5 * eps, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        double abs_tol, std::span<const double> breaks) {
    if (!(b > a)) return 0.0;
    std::vector<double> cuts{a};
    for (double x : breaks)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // A coarse pass fixes the error budget, then each panel refines on its own.
    constexpr int kPanelsPerPiece = 8;
    std::vector<Panel> panels;
    double coarse = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double w = (cuts[i + 1] - lo) / kPanelsPerPiece;
        double x0 = lo, f0 = f(lo);
        for (int k = 1; k <= kPanelsPerPiece; ++k) {
            const double x1 = (k == kPanelsPerPiece) ? cuts[i + 1] : lo + k * w;
            const double xm = 0.5 * (x0 + x1);
            const double fm = f(xm), f1 = f(x1);
            const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            panels.push_back({x0, f0, xm, fm, x1, f1, whole});
            coarse += std::abs(whole);
            x0 = x1;
            f0 = f1;
        }
    }
    const double eps = std::max(rel_tol * coarse, abs_tol) / static_cast<double>(panels.size());
    double total = 0.0;
    for (const auto& p : panels) total += simpson_rec(f, p, eps, 40);
    if (!std::isfinite(total)) throw std::domain_error("adaptive_simpson: non-finite integral");
    return total;
}

}  // namespace psq
