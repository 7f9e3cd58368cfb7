#include "psq/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psq/quadrature.hpp"

namespace psq {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadRelTol = 1e-11;
constexpr double kQuadAbsTol = 1e-16;
// Above this many parts per law, per-part breakpoints are left to adaptivity.
constexpr std::size_t kMaxBreakParts = 32;

double view_tail(const Distribution& d, LawView v, double x) {
    return v == LawView::base ? d.tail(x) : d.excess_tail(x);
}

double view_density(const Distribution& d, LawView v, double x) {
    return v == LawView::base ? d.density(x) : d.excess_density(x);
}

double view_integrated_tail(const Distribution& d, LawView v, double s) {
    return v == LawView::base ? d.integrated_tail(s) : d.excess_integrated_tail(s);
}

std::vector<double> view_breakpoints(const Distribution& d, LawView v) {
    auto b = d.breakpoints();
    if (v == LawView::excess) b.push_back(0.0);
    return b;
}

double checked(const TestFunction& g, double x) {
    const double y = g.f(x);
    if (!std::isfinite(y)) {
        std::ostringstream os;
        os << "test function " << g.name << " is not finite at x = " << x;
        throw EvaluationError(os.str());
    }
    return y;
}

struct LawGroup {
    const Distribution* dist;
    LawView view;
    std::vector<const ParametricPart*> parts;
};

std::vector<LawGroup> group_parts(const std::vector<ParametricPart>& parts) {
    std::vector<LawGroup> groups;
    for (const auto& p : parts) {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const LawGroup& g) { return g.dist == p.dist.get() && g.view == p.view; });
        if (it == groups.end()) {
            groups.push_back({p.dist.get(), p.view, {}});
            it = std::prev(groups.end());
        }
        it->parts.push_back(&p);
    }
    return groups;
}

double integrate_group(const TestFunction& g, const LawGroup& grp) {
    const Distribution& d = *grp.dist;
    const LawView v = grp.view;

    if (g.kind == TestFunction::Kind::one) {
        double s = 0.0;
        for (const auto* p : grp.parts) s += p->scale * view_tail(d, v, p->shift);
        return s;
    }
    if (g.kind == TestFunction::Kind::identity) {
        double s = 0.0;
        for (const auto* p : grp.parts) s += p->scale * view_integrated_tail(d, v, p->shift);
        return s;
    }
    if (v == LawView::base && d.atomic()) {
        const double at = *d.atom();
        double s = 0.0;
        for (const auto* p : grp.parts) {
            const double x = at - p->shift;
            if (x > 0) s += p->scale * checked(g, x);
        }
        return s;
    }

    double min_shift = kInf;
    for (const auto* p : grp.parts) min_shift = std::min(min_shift, p->shift);
    const double lo = std::max(0.0, g.zero_below);
    const double hi = std::min(g.const_above, d.effective_upper() - min_shift);

    double total = 0.0;
    if (hi > lo) {
        std::vector<double> breaks = g.knots;
        if (grp.parts.size() <= kMaxBreakParts) {
            const auto bps = view_breakpoints(d, v);
            for (const auto* p : grp.parts)
                for (double b : bps) breaks.push_back(b - p->shift);
        }
        auto integrand = [&](double x) {
            double dens = 0.0;
            for (const auto* p : grp.parts) dens += p->scale * view_density(d, v, x + p->shift);
            if (dens == 0.0) return 0.0;
            return checked(g, x) * dens;
        };
        total += adaptive_simpson(integrand, lo, hi, kQuadRelTol, kQuadAbsTol, breaks);
    }
    if (std::isfinite(g.const_above) && g.tail_value != 0.0) {
        double t = 0.0;
        for (const auto* p : grp.parts) t += p->scale * view_tail(d, v, g.const_above + p->shift);
        total += g.tail_value * t;
    }
    return total;
}

}  // namespace

double ParametricPart::mass() const { return scale * view_tail(*dist, view, shift); }

double ParametricPart::support_end() const {
    if (scale <= 0.0) return 0.0;
    return std::max(0.0, dist->effective_upper() - shift);
}

FiniteMeasure FiniteMeasure::from_atoms(std::vector<Atom> atoms) {
    FiniteMeasure m;
    for (const auto& a : atoms) m.add_atom(a.location, a.weight);
    return m;
}

FiniteMeasure FiniteMeasure::unit_atoms(std::span<const double> locations, double weight) {
    FiniteMeasure m;
    m.atoms_.reserve(locations.size());
    for (double x : locations) m.add_atom(x, weight);
    return m;
}

FiniteMeasure FiniteMeasure::parametric(std::shared_ptr<const Distribution> dist, LawView view, double scale,
                                        double shift) {
    FiniteMeasure m;
    m.add_part({std::move(dist), view, scale, shift});
    return m;
}

void FiniteMeasure::add_atom(double location, double weight) {
    if (!std::isfinite(location) || location < 0.0) throw std::domain_error("atom location must be finite and >= 0");
    if (!std::isfinite(weight) || weight < 0.0) throw std::domain_error("atom weight must be finite and >= 0");
    if (location == 0.0 || weight == 0.0) return;  // delta^+ truncation
    atoms_.push_back({location, weight});
}

void FiniteMeasure::add_part(ParametricPart part) {
    if (!part.dist) throw std::invalid_argument("parametric part without a distribution");
    if (!std::isfinite(part.scale) || part.scale < 0.0) throw std::domain_error("part scale must be finite and >= 0");
    if (!std::isfinite(part.shift) || part.shift < 0.0) throw std::domain_error("part shift must be finite and >= 0");
    if (const auto* e = std::get_if<Exponential>(&part.dist->law())) {
        // memoryless: a shifted (or excess) exponential is a rescaled copy of the law
        part.scale *= std::exp(-e->rate * part.shift);
        part.shift = 0.0;
        part.view = LawView::base;
        if (!parts_.empty()) {
            auto& last = parts_.back();
            if (last.dist == part.dist && last.view == LawView::base && last.shift == 0.0) {
                last.scale += part.scale;
                return;
            }
        }
    }
    if (part.scale == 0.0 || part.mass() == 0.0) return;
    parts_.push_back(std::move(part));
}

double FiniteMeasure::total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.weight;
    for (const auto& p : parts_) m += p.mass();
    return m;
}

double FiniteMeasure::support_end() const {
    double e = 0.0;
    for (const auto& a : atoms_) e = std::max(e, a.location);
    for (const auto& p : parts_) e = std::max(e, p.support_end());
    return e;
}

FiniteMeasure FiniteMeasure::scaled(double c) const {
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::domain_error("measure scale must be finite and >= 0");
    FiniteMeasure m;
    if (c == 0.0) return m;
    m.atoms_ = atoms_;
    for (auto& a : m.atoms_) a.weight *= c;
    m.parts_ = parts_;
    for (auto& p : m.parts_) p.scale *= c;
    return m;
}

FiniteMeasure& FiniteMeasure::operator+=(const FiniteMeasure& other) {
    atoms_.insert(atoms_.end(), other.atoms_.begin(), other.atoms_.end());
    for (const auto& p : other.parts_) add_part(p);
    return *this;
}

double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * (3.0 - 2.0 * u);
}

double smoothstep_derivative(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return 6.0 * u * (1.0 - u);
}

double TestFunction::derivative(double x) const {
    if (!df) throw std::logic_error("test function " + name + " has no derivative");
    return df(x);
}

TestFunction TestFunction::derivative_function() const {
    if (!df) throw std::logic_error("test function " + name + " has no derivative");
    TestFunction d;
    d.f = df;
    d.kind = Kind::general;
    d.zero_below = zero_below;
    d.const_above = const_above;
    d.tail_value = 0.0;
    d.knots = knots;
    d.name = name + "'";
    return d;
}

TestFunction TestFunction::one() {
    TestFunction g;
    g.f = [](double) { return 1.0; };
    g.df = [](double) { return 0.0; };
    g.kind = Kind::one;
    g.const_above = 0.0;
    g.tail_value = 1.0;
    g.name = "1";
    return g;
}

TestFunction TestFunction::identity() {
    TestFunction g;
    g.f = [](double x) { return x; };
    g.df = [](double) { return 1.0; };
    g.kind = Kind::identity;
    g.name = "chi";
    return g;
}

TestFunction TestFunction::power(double p) {
    TestFunction g;
    g.f = [p](double x) { return std::pow(x, p); };
    g.df = [p](double x) { return p * std::pow(x, p - 1.0); };
    g.name = "chi^" + std::to_string(p);
    return g;
}

TestFunction TestFunction::general(std::function<double(double)> f, std::function<double(double)> df, std::string name) {
    TestFunction g;
    g.f = std::move(f);
    g.df = std::move(df);
    g.name = std::move(name);
    return g;
}

TestFunction TestFunction::bump(double center, double width) {
    TestFunction g;
    g.f = [center, width](double x) { return 1.0 - smoothstep(std::abs(x - center) / width); };
    g.df = [center, width](double x) {
        const double u = (x - center) / width;
        return -(u >= 0 ? 1.0 : -1.0) * smoothstep_derivative(std::abs(u)) / width;
    };
    g.zero_below = std::max(0.0, center - width);
    g.const_above = center + width;
    g.tail_value = 0.0;
    g.knots = {center};
    std::ostringstream os;
    os << "bump(" << center << "," << width << ")";
    g.name = os.str();
    return g;
}

TestFunction TestFunction::ramp(int k) {
    TestFunction g;
    const double left = k - 1.0;
    g.f = [left](double x) { return smoothstep(x - left); };
    g.df = [left](double x) { return smoothstep_derivative(x - left); };
    g.zero_below = left;
    g.const_above = left + 1.0;
    g.tail_value = 1.0;
    g.name = "ramp(" + std::to_string(k) + ")";
    return g;
}

TestFunctionFamily::TestFunctionFamily(int k_max) {
    if (k_max < 1) throw std::invalid_argument("TestFunctionFamily: k_max must be positive");
    // dyadic bumps ordered by (level q, index j): centers j 2^-q in [0, 1], width 2^-q
    for (int q = 0; static_cast<int>(bumps_.size()) < k_max; ++q) {
        const double w = std::ldexp(1.0, -q);
        const int n = 1 << q;
        for (int j = 0; j <= n && static_cast<int>(bumps_.size()) < k_max; ++j) bumps_.push_back(TestFunction::bump(j * w, w));
    }
}

int TestFunctionFamily::ramp_count(double support_end) {
    return static_cast<int>(std::ceil(std::max(support_end, 0.0))) + 1;
}

double integrate(const TestFunction& g, const FiniteMeasure& zeta) {
    double total = 0.0;
    for (const auto& a : zeta.atoms()) total += a.weight * checked(g, a.location);
    for (const auto& grp : group_parts(zeta.parts())) total += integrate_group(g, grp);
    return total;
}

double integrate(const std::function<double(double)>& g, const FiniteMeasure& zeta) {
    return integrate(TestFunction::general(g), zeta);
}

FiniteMeasure shift_kill(const FiniteMeasure& zeta, double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::domain_error("shift_kill: shift must be finite and >= 0");
    if (s == 0.0) return zeta;
    FiniteMeasure out;
    for (const auto& a : zeta.atoms())
        if (a.location - s > 0.0) out.add_atom(a.location - s, a.weight);
    for (auto p : zeta.parts()) {
        p.shift += s;
        out.add_part(std::move(p));
    }
    return out;
}

FiniteMeasure lift(double w, std::shared_ptr<const Distribution> nu) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::domain_error("lift: workload must be finite and >= 0");
    if (w == 0.0) return {};
    const double me = nu->excess_mean();
    return FiniteMeasure::parametric(std::move(nu), LawView::excess, w / me);
}

MeasureProfile MeasureProfile::scaled(double c) const {
    MeasureProfile p = *this;
    for (double& v : p.bump_values) v *= c;
    for (double& v : p.ramp_values) v *= c;
    return p;
}

MeasureProfile profile(const FiniteMeasure& zeta, const TestFunctionFamily& fam) {
    MeasureProfile p;
    p.bump_values.resize(static_cast<std::size_t>(fam.k_max()));
    for (int k = 1; k <= fam.k_max(); ++k) p.bump_values[static_cast<std::size_t>(k - 1)] = integrate(fam.bump(k), zeta);
    if (zeta.is_zero()) return p;
    const int nr = TestFunctionFamily::ramp_count(zeta.support_end());
    p.ramp_values.resize(static_cast<std::size_t>(nr));
    for (int k = 1; k <= nr; ++k) p.ramp_values[static_cast<std::size_t>(k - 1)] = integrate(fam.ramp(k), zeta);
    return p;
}

MeasureProfile profile_unit_atoms(std::span<const double> locations, double weight, const TestFunctionFamily& fam) {
    MeasureProfile p;
    p.bump_values.assign(static_cast<std::size_t>(fam.k_max()), 0.0);
    double end = 0.0;
    for (double x : locations) end = std::max(end, x);
    for (int k = 1; k <= fam.k_max(); ++k) {
        const auto& g = fam.bump(k);
        double s = 0.0;
        for (double x : locations)
            if (x > g.zero_below && x < g.const_above) s += g.f(x);
        p.bump_values[static_cast<std::size_t>(k - 1)] = weight * s;
    }
    if (locations.empty()) return p;
    const int nr = TestFunctionFamily::ramp_count(end);
    p.ramp_values.assign(static_cast<std::size_t>(nr), 0.0);
    for (double x : locations) {
        if (x <= 0.0) continue;
        // h_k(x) = 1 for k <= floor(x), smoothstep on the straddling ramp, 0 beyond
        const int full = static_cast<int>(std::floor(x));
        for (int k = 1; k <= std::min(full, nr); ++k) p.ramp_values[static_cast<std::size_t>(k - 1)] += weight;
        if (full + 1 <= nr) p.ramp_values[static_cast<std::size_t>(full)] += weight * smoothstep(x - full);
    }
    return p;
}

double metric_from_profiles(const MeasureProfile& a, const MeasureProfile& b) {
    if (a.bump_values.size() != b.bump_values.size())
        throw std::invalid_argument("metric: profiles from different families");
    double series = 0.0;
    // smallest terms first
    for (std::size_t k = a.bump_values.size(); k-- > 0;) {
        const double diff = std::min(std::abs(a.bump_values[k] - b.bump_values[k]), 1.0);
        series += std::ldexp(diff, -static_cast<int>(k + 1));
    }
    double sup = 0.0;
    const std::size_t nr = std::max(a.ramp_values.size(), b.ramp_values.size());
    for (std::size_t k = 0; k < nr; ++k) {
        const double va = k < a.ramp_values.size() ? a.ramp_values[k] : 0.0;
        const double vb = k < b.ramp_values.size() ? b.ramp_values[k] : 0.0;
        sup = std::max(sup, std::abs(va - vb));
    }
    return series + sup;
}

double metric_d(const FiniteMeasure& a, const FiniteMeasure& b, const TestFunctionFamily& fam) {
    return metric_from_profiles(profile(a, fam), profile(b, fam));
}

double modulus(std::span<const TimedMeasure> path, double delta, const TestFunctionFamily& fam) {
    if (path.size() < 2) throw std::domain_error("modulus: need at least two samples");
    if (!(delta > 0.0)) throw std::domain_error("modulus: delta must be positive");
    std::vector<MeasureProfile> profiles;
    profiles.reserve(path.size());
    for (const auto& s : path) profiles.push_back(profile(s.measure, fam));
    constexpr double kSlack = 1e-12;
    double w = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i > 0 && !(path[i].t > path[i - 1].t)) throw std::domain_error("modulus: times must increase");
        for (std::size_t j = i + 1; j < path.size() && path[j].t - path[i].t <= delta + kSlack; ++j)
            w = std::max(w, metric_from_profiles(profiles[j], profiles[i]));
    }
    return w;
}

}  // namespace psq
