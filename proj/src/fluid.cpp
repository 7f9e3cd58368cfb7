#include "psq/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace psq {
namespace {

// xi((s, inf)) with atoms sorted once.
class InitialTail {
public:
    explicit InitialTail(const FiniteMeasure& xi) : parts_(xi.parts()) {
        auto atoms = xi.atoms();
        std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
        locations_.reserve(atoms.size());
        suffix_.assign(atoms.size() + 1, 0.0);
        for (const auto& a : atoms) locations_.push_back(a.location);
        for (std::size_t i = atoms.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + atoms[i].weight;
    }

    double operator()(double s) const {
        const auto idx = std::upper_bound(locations_.begin(), locations_.end(), s) - locations_.begin();
        double m = suffix_[static_cast<std::size_t>(idx)];
        for (const auto& p : parts_) {
            const double x = p.shift + s;
            m += p.scale * (p.view == LawView::base ? p.dist->tail(x) : p.dist->excess_tail(x));
        }
        return m;
    }

private:
    std::vector<ParametricPart> parts_;
    std::vector<double> locations_;
    std::vector<double> suffix_;
};

std::string at_time(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

}  // namespace

double FluidPath::s_at(double time) const {
    if (t.empty()) return 0.0;
    if (time <= t.front()) return s.front();
    if (time >= t.back()) return s.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), time) - t.begin()) - 1;
    const double frac = (time - t[k]) / (t[k + 1] - t[k]);
    return s[k] + frac * (s[k + 1] - s[k]);
}

FluidPath fluid_solve(const FiniteMeasure& xi, double alpha, std::shared_ptr<const Distribution> nu, double horizon,
                      double step) {
    if (!nu) throw std::invalid_argument("fluid_solve: missing service law");
    if (!(horizon > 0.0) || !(step > 0.0)) throw std::domain_error("fluid_solve: horizon and step must be positive");
    if (step > 1e-2 * horizon * (1.0 + 1e-9)) throw std::domain_error("fluid_solve: step must be <= 1e-2 * horizon");
    if (!(alpha >= 0.0)) throw std::domain_error("fluid_solve: alpha must be >= 0");

    const auto n = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
    const double h = horizon / static_cast<double>(n);
    FluidPath path;
    path.initial = xi;
    path.alpha = alpha;
    path.nu = nu;
    path.step = h;
    path.t.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) path.t[k] = h * static_cast<double>(k);
    path.s.assign(n + 1, 0.0);
    path.z.assign(n + 1, 0.0);
    if (xi.is_zero()) return path;

    const InitialTail xi_tail(xi);
    const Distribution& law = *nu;
    auto& S = path.s;
    // Z at node k given S[0..k-1] and a trial value s_k for S[k]
    auto mass = [&](std::size_t k, double s_k) {
        double memory = 0.0;
        if (k > 0) {
            memory = 0.5 * law.tail(s_k - S[0]) + 0.5;  // tail(0) = 1 at the node itself
            for (std::size_t j = 1; j < k; ++j) memory += law.tail(s_k - S[j]);
            memory *= h;
        }
        return xi_tail(s_k) + alpha * memory;
    };
    auto checked = [&](double z, std::size_t k) {
        if (!(z >= kFluidMassFloor))
            throw FluidSingularity("fluid_solve: mass fell below the numerical floor at t = " + at_time(path.t[k]),
                                   path.t[k]);
        return z;
    };

    path.z[0] = checked(mass(0, 0.0), 0);
    for (std::size_t k = 0; k < n; ++k) {
        const double slope = 1.0 / path.z[k];
        const double predicted = S[k] + h * slope;
        const double z_pred = checked(mass(k + 1, predicted), k + 1);
        S[k + 1] = S[k] + 0.5 * h * (slope + 1.0 / z_pred);
        path.z[k + 1] = checked(mass(k + 1, S[k + 1]), k + 1);
    }
    return path;
}

FiniteMeasure fluid_measure_at(const FluidPath& path, double t) {
    const double L = path.horizon();
    if (!(t >= 0.0) || t > L * (1.0 + 1e-12)) throw std::domain_error("fluid_measure_at: t outside [0, L]");
    t = std::min(t, L);
    if (path.is_zero()) return {};
    const double s_t = path.s_at(t);
    FiniteMeasure m = shift_kill(path.initial, s_t);
    if (path.alpha == 0.0 || t == 0.0) return m;

    // trapezoid nodes: grid points below t, then t itself
    std::vector<double> nodes, shifts;
    for (std::size_t k = 0; k < path.t.size() && path.t[k] < t * (1.0 - 1e-14); ++k) {
        nodes.push_back(path.t[k]);
        shifts.push_back(s_t - path.s[k]);
    }
    nodes.push_back(t);
    shifts.push_back(0.0);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double left = j > 0 ? nodes[j] - nodes[j - 1] : 0.0;
        const double right = j + 1 < nodes.size() ? nodes[j + 1] - nodes[j] : 0.0;
        const double w = 0.5 * (left + right);
        if (w > 0.0) m.add_part({path.nu, LawView::base, path.alpha * w, std::max(shifts[j], 0.0)});
    }
    return m;
}

std::vector<double> fluid_workloads(const FluidPath& path) {
    std::vector<double> w(path.t.size(), 0.0);
    if (path.is_zero()) return w;
    const auto chi = TestFunction::identity();
    for (std::size_t k = 0; k < path.t.size(); ++k) w[k] = integrate(chi, fluid_measure_at(path, path.t[k]));
    return w;
}

FiniteMeasure fluid_steady_state(const FiniteMeasure& xi, std::shared_ptr<const Distribution> nu) {
    return lift(integrate(TestFunction::identity(), xi), std::move(nu));
}

double residual_4_2(const FluidPath& path, const TestFunction& g, double t) {
    if (!g.df) throw std::domain_error("residual_4_2: test function needs a derivative");
    if (std::abs(g(0.0)) > 1e-12 || std::abs(g.derivative(0.0)) > 1e-12)
        throw std::domain_error("residual_4_2: test function must satisfy g(0) = g'(0) = 0");
    if (!(t >= 0.0) || t > path.horizon() * (1.0 + 1e-12)) throw std::domain_error("residual_4_2: t outside [0, L]");
    if (t == 0.0 || path.is_zero()) return 0.0;

    const TestFunction dg = g.derivative_function();
    const auto one = TestFunction::one();
    std::vector<double> nodes;
    for (double tk : path.t)
        if (tk < t * (1.0 - 1e-14)) nodes.push_back(tk);
    nodes.push_back(t);

    double drift = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const FiniteMeasure m = fluid_measure_at(path, nodes[j]);
        const double val = integrate(dg, m) / integrate(one, m);
        if (j > 0) drift += 0.5 * (nodes[j] - nodes[j - 1]) * (val + prev);
        prev = val;
    }
    const double now = integrate(g, fluid_measure_at(path, t));
    const double start = integrate(g, path.initial);
    const double influx = path.alpha * t * integrate(g, FiniteMeasure::parametric(path.nu, LawView::base, 1.0));
    return std::abs(now - start + drift - influx);
}

void write_csv(const FluidPath& path, std::ostream& out) {
    const auto w = fluid_workloads(path);
    out << "t,S,Z,workload\n";
    char buf[128];
    for (std::size_t k = 0; k < path.t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", path.t[k], path.s[k], path.z[k], w[k]);
        out << buf;
    }
}

}  // namespace psq
