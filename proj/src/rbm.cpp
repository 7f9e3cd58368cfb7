#include "psq/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace psq {

RbmParams RbmParams::from_limits(double lambda, double alpha, double a, double beta, double b, double w0) {
    return {lambda, alpha * a * a + beta * b * b, w0};
}

namespace {

void check(const RbmParams& p, double horizon, double step) {
    if (!(p.sigma2 > 0.0)) throw std::domain_error("rbm: variance must be positive");
    if (!(p.w0 >= 0.0)) throw std::domain_error("rbm: initial value must be >= 0");
    if (!(step > 0.0) || !(horizon >= 0.0)) throw std::domain_error("rbm: need step > 0 and horizon >= 0");
}

// Free process plus running minimum, one grid step at a time.
class Stepper {
public:
    Stepper(const RbmParams& p, double step, Stream& rng)
        : drift_(-p.lambda * step), sd_(std::sqrt(p.sigma2 * step)), var_(p.sigma2 * step),
          bridge_(p.reflection == Reflection::bridge), x_(p.w0), rng_(rng) {}

    void step() {
        const double prev = x_;
        x_ += drift_ + sd_ * rng_.normal();
        double low = x_;
        if (bridge_) {
            const double dx = x_ - prev;
            low = 0.5 * (prev + x_ - std::sqrt(dx * dx - 2.0 * var_ * std::log(rng_.uniform())));
        }
        push_ = std::max(push_, -low);
    }
    double w() const { return x_ + push_; }
    double push() const { return push_; }

private:
    double drift_, sd_, var_;
    bool bridge_;
    double x_;
    double push_ = 0.0;
    Stream& rng_;
};

std::size_t steps(double horizon, double step) { return static_cast<std::size_t>(std::ceil(horizon / step - 1e-9)); }

}  // namespace

RbmPath rbm_simulate(const RbmParams& params, double horizon, double step, Stream& rng) {
    check(params, horizon, step);
    const auto n = steps(horizon, step);
    RbmPath p;
    p.t.resize(n + 1);
    p.w.resize(n + 1);
    p.push.resize(n + 1);
    Stepper s(params, step, rng);
    p.w[0] = s.w();
    for (std::size_t k = 1; k <= n; ++k) {
        s.step();
        p.t[k] = step * static_cast<double>(k);
        p.w[k] = s.w();
        p.push[k] = s.push();
    }
    return p;
}

double rbm_terminal(const RbmParams& params, double horizon, double step, Stream& rng) {
    check(params, horizon, step);
    const auto n = steps(horizon, step);
    Stepper s(params, step, rng);
    for (std::size_t k = 1; k <= n; ++k) s.step();
    return s.w();
}

double rbm_steady_cdf(const RbmParams& params, double x) {
    if (!(params.lambda > 0.0)) throw NoSteadyState("rbm_steady_cdf: requires lambda > 0");
    if (x <= 0.0) return 0.0;
    return -std::expm1(-2.0 * params.lambda * x / params.sigma2);
}

double zstar_steady_cdf(double x, double lambda, double beta, double a, double b) {
    if (!(lambda > 0.0)) throw NoSteadyState("zstar_steady_cdf: requires lambda > 0");
    if (x <= 0.0) return 0.0;
    return -std::expm1(-lambda * (1.0 / (beta * beta) + b * b) / (a * a + b * b) * x);
}

double c_nu(double beta, double b) { return 2.0 * beta / (1.0 + beta * beta * b * b); }

void write_csv(const RbmPath& path, std::ostream& out) {
    out << "t,W\n";
    char buf[64];
    for (std::size_t k = 0; k < path.t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", path.t[k], path.w[k]);
        out << buf;
    }
}

}  // namespace psq
