#include "psq/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "psq/quadrature.hpp"

namespace psq {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailCut = 1e-18;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("distribution: " + what);
}

double bp_norm(const BoundedPareto& d) { return 1.0 - std::pow(d.x_min / d.x_max, d.shape); }

// Poisson(m) cdf at n: sum_{j<=n} e^{-m} m^j / j!
double poisson_cdf(int n, double m) {
    double term = std::exp(-m), sum = term;
    for (int j = 1; j <= n; ++j) {
        term *= m / j;
        sum += term;
    }
    return sum;
}

void validate(const Distribution::Law& law) {
    std::visit(overloaded{
                   [](const Exponential& d) { require(d.rate > 0 && std::isfinite(d.rate), "exponential rate must be positive"); },
                   [](const Deterministic& d) { require(d.value > 0 && std::isfinite(d.value), "deterministic value must be positive"); },
                   [](const Uniform& d) { require(d.lo >= 0 && d.hi > d.lo && std::isfinite(d.hi), "uniform needs 0 <= lo < hi"); },
                   [](const Erlang& d) { require(d.shape >= 1 && d.rate > 0, "erlang needs shape >= 1 and rate > 0"); },
                   [](const HyperExponential& d) {
                       require(!d.probs.empty() && d.probs.size() == d.rates.size(), "hyperexp probs/rates size mismatch");
                       double s = 0.0;
                       for (std::size_t i = 0; i < d.probs.size(); ++i) {
                           require(d.probs[i] >= 0 && d.rates[i] > 0, "hyperexp needs probs >= 0 and rates > 0");
                           s += d.probs[i];
                       }
                       require(std::abs(s - 1.0) <= 1e-12, "hyperexp probs must sum to 1");
                   },
                   [](const BoundedPareto& d) {
                       require(d.shape > 0 && d.x_min > 0 && d.x_max > d.x_min, "bounded pareto needs shape > 0, 0 < x_min < x_max");
                   },
                   [](const Pareto& d) { require(d.shape > 1 && d.x_min > 0, "pareto needs shape > 1 and x_min > 0"); },
               },
               law);
}

}  // namespace

Distribution::Distribution(Law law) : law_(std::move(law)) {
    validate(law_);
    mean_ = moment(1.0);
    second_moment_ = moment(2.0);
    effective_upper_ = std::visit(
        overloaded{
            [](const Exponential& d) { return -std::log(kTailCut) / d.rate; },
            [](const Deterministic& d) { return d.value; },
            [](const Uniform& d) { return d.hi; },
            [this](const Erlang& d) {
                double hi = d.shape / d.rate;
                while (tail(hi) > kTailCut) hi *= 2.0;
                double lo = 0.0;
                for (int i = 0; i < 200; ++i) {
                    const double m = 0.5 * (lo + hi);
                    (tail(m) > kTailCut ? lo : hi) = m;
                }
                return hi;
            },
            [](const HyperExponential& d) {
                return -std::log(kTailCut) / *std::min_element(d.rates.begin(), d.rates.end());
            },
            [](const BoundedPareto& d) { return d.x_max; },
            [](const Pareto& d) { return d.x_min * std::pow(kTailCut, -1.0 / d.shape); },
        },
        law_);
}

std::string Distribution::kind() const {
    return std::visit(overloaded{
                          [](const Exponential&) { return std::string("exponential"); },
                          [](const Deterministic&) { return std::string("deterministic"); },
                          [](const Uniform&) { return std::string("uniform"); },
                          [](const Erlang&) { return std::string("erlang"); },
                          [](const HyperExponential&) { return std::string("hyperexp"); },
                          [](const BoundedPareto&) { return std::string("bounded_pareto"); },
                          [](const Pareto&) { return std::string("pareto"); },
                      },
                      law_);
}

double Distribution::stddev() const { return std::sqrt(std::max(0.0, second_moment_ - mean_ * mean_)); }

double Distribution::moment(double p) const {
    return std::visit(
        overloaded{
            [p](const Exponential& d) { return std::tgamma(p + 1.0) / std::pow(d.rate, p); },
            [p](const Deterministic& d) { return std::pow(d.value, p); },
            [p](const Uniform& d) {
                return (std::pow(d.hi, p + 1.0) - std::pow(d.lo, p + 1.0)) / ((p + 1.0) * (d.hi - d.lo));
            },
            [p](const Erlang& d) {
                return std::exp(std::lgamma(d.shape + p) - std::lgamma(static_cast<double>(d.shape))) / std::pow(d.rate, p);
            },
            [p](const HyperExponential& d) {
                double s = 0.0;
                for (std::size_t i = 0; i < d.probs.size(); ++i)
                    s += d.probs[i] * std::tgamma(p + 1.0) / std::pow(d.rates[i], p);
                return s;
            },
            [p](const BoundedPareto& d) {
                const double c = d.shape * std::pow(d.x_min, d.shape) / bp_norm(d);
                const double e = p - d.shape;
                if (std::abs(e) < 1e-14) return c * std::log(d.x_max / d.x_min);
                return c * (std::pow(d.x_max, e) - std::pow(d.x_min, e)) / e;
            },
            [p](const Pareto& d) {
                if (p >= d.shape) return kInf;
                return d.shape * std::pow(d.x_min, p) / (d.shape - p);
            },
        },
        law_);
}

double Distribution::cdf(double x) const { return 1.0 - tail(x); }

double Distribution::tail(double x) const {
    if (x < 0) return 1.0;
    return std::visit(overloaded{
                          [x](const Exponential& d) { return std::exp(-d.rate * x); },
                          [x](const Deterministic& d) { return x < d.value ? 1.0 : 0.0; },
                          [x](const Uniform& d) {
                              if (x <= d.lo) return 1.0;
                              if (x >= d.hi) return 0.0;
                              return (d.hi - x) / (d.hi - d.lo);
                          },
                          [x](const Erlang& d) { return poisson_cdf(d.shape - 1, d.rate * x); },
                          [x](const HyperExponential& d) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < d.probs.size(); ++i) s += d.probs[i] * std::exp(-d.rates[i] * x);
                              return s;
                          },
                          [x](const BoundedPareto& d) {
                              if (x <= d.x_min) return 1.0;
                              if (x >= d.x_max) return 0.0;
                              const double q = std::pow(d.x_min / d.x_max, d.shape);
                              return (std::pow(d.x_min / x, d.shape) - q) / (1.0 - q);
                          },
                          [x](const Pareto& d) { return x <= d.x_min ? 1.0 : std::pow(d.x_min / x, d.shape); },
                      },
                      law_);
}

double Distribution::density(double x) const {
    if (x < 0) return 0.0;
    return std::visit(overloaded{
                          [x](const Exponential& d) { return d.rate * std::exp(-d.rate * x); },
                          [](const Deterministic&) { return 0.0; },
                          [x](const Uniform& d) { return (x >= d.lo && x <= d.hi) ? 1.0 / (d.hi - d.lo) : 0.0; },
                          [x](const Erlang& d) {
                              return d.rate * std::exp((d.shape - 1) * std::log(d.rate * x) - d.rate * x -
                                                       std::lgamma(static_cast<double>(d.shape)));
                          },
                          [x](const HyperExponential& d) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < d.probs.size(); ++i)
                                  s += d.probs[i] * d.rates[i] * std::exp(-d.rates[i] * x);
                              return s;
                          },
                          [x](const BoundedPareto& d) {
                              if (x < d.x_min || x > d.x_max) return 0.0;
                              return d.shape * std::pow(d.x_min, d.shape) * std::pow(x, -d.shape - 1.0) / bp_norm(d);
                          },
                          [x](const Pareto& d) {
                              return x < d.x_min ? 0.0 : d.shape * std::pow(d.x_min, d.shape) * std::pow(x, -d.shape - 1.0);
                          },
                      },
                      law_);
}

std::optional<double> Distribution::atom() const {
    if (const auto* d = std::get_if<Deterministic>(&law_)) return d->value;
    return std::nullopt;
}

double Distribution::support_lower() const {
    return std::visit(overloaded{
                          [](const Deterministic& d) { return d.value; },
                          [](const Uniform& d) { return d.lo; },
                          [](const BoundedPareto& d) { return d.x_min; },
                          [](const Pareto& d) { return d.x_min; },
                          [](const auto&) { return 0.0; },
                      },
                      law_);
}

double Distribution::support_upper() const {
    return std::visit(overloaded{
                          [](const Deterministic& d) { return d.value; },
                          [](const Uniform& d) { return d.hi; },
                          [](const BoundedPareto& d) { return d.x_max; },
                          [](const auto&) { return kInf; },
                      },
                      law_);
}

std::vector<double> Distribution::breakpoints() const {
    std::vector<double> b{support_lower()};
    if (std::isfinite(support_upper()) && support_upper() > support_lower()) b.push_back(support_upper());
    return b;
}

double Distribution::integrated_tail(double s) const {
    s = std::max(s, 0.0);
    return std::visit(
        overloaded{
            [s](const Exponential& d) { return std::exp(-d.rate * s) / d.rate; },
            [s](const Deterministic& d) { return std::max(d.value - s, 0.0); },
            [s](const Uniform& d) {
                if (s <= d.lo) return 0.5 * (d.lo + d.hi) - s;
                if (s >= d.hi) return 0.0;
                return (d.hi - s) * (d.hi - s) / (2.0 * (d.hi - d.lo));
            },
            [s](const Erlang& d) {
                double acc = 0.0;
                for (int n = 0; n < d.shape; ++n) acc += poisson_cdf(n, d.rate * s);
                return acc / d.rate;
            },
            [s](const HyperExponential& d) {
                double acc = 0.0;
                for (std::size_t i = 0; i < d.probs.size(); ++i) acc += d.probs[i] * std::exp(-d.rates[i] * s) / d.rates[i];
                return acc;
            },
            [this, s](const BoundedPareto& d) {
                // no closed form wired in; quadrature of the tail
                const double lo = std::max(s, d.x_min);
                const double head = std::max(d.x_min - s, 0.0);
                if (lo >= d.x_max) return 0.0;
                return head + adaptive_simpson([this](double y) { return tail(y); }, lo, d.x_max, 1e-12, 1e-18);
            },
            [s](const Pareto& d) {
                const double lo = std::max(s, d.x_min);
                const double head = std::max(d.x_min - s, 0.0);
                return head + d.x_min * std::pow(d.x_min / lo, d.shape - 1.0) / (d.shape - 1.0);
            },
        },
        law_);
}

double Distribution::excess_cdf(double x) const {
    if (x <= 0) return 0.0;
    const double v = 1.0 - integrated_tail(x) / mean_;
    return std::clamp(v, 0.0, 1.0);
}

double Distribution::excess_mean() const {
    if (!std::isfinite(second_moment_)) throw std::domain_error("excess_mean: infinite second moment");
    return second_moment_ / (2.0 * mean_);
}

double Distribution::excess_integrated_tail(double s) const {
    s = std::max(s, 0.0);
    if (const auto* d = std::get_if<Exponential>(&law_)) return std::exp(-d->rate * s) / d->rate;
    if (const auto* d = std::get_if<Deterministic>(&law_)) {
        const double r = std::max(d->value - s, 0.0);
        return r * r / (2.0 * d->value);
    }
    const double hi = effective_upper_;
    if (s >= hi) return 0.0;
    const auto bps = breakpoints();
    return adaptive_simpson([this](double y) { return integrated_tail(y) / mean_; }, s, hi, 1e-12, 1e-18, bps);
}

double Distribution::sample(Stream& rng) const {
    return std::visit(overloaded{
                          [&rng](const Exponential& d) { return -std::log(rng.uniform()) / d.rate; },
                          [](const Deterministic& d) { return d.value; },
                          [&rng](const Uniform& d) { return d.lo + (d.hi - d.lo) * rng.uniform(); },
                          [&rng](const Erlang& d) {
                              double s = 0.0;
                              for (int i = 0; i < d.shape; ++i) s -= std::log(rng.uniform());
                              return s / d.rate;
                          },
                          [&rng](const HyperExponential& d) {
                              const double u = rng.uniform();
                              std::size_t i = 0;
                              double acc = d.probs[0];
                              while (u > acc && i + 1 < d.probs.size()) acc += d.probs[++i];
                              return -std::log(rng.uniform()) / d.rates[i];
                          },
                          [&rng](const BoundedPareto& d) {
                              const double u = rng.uniform();
                              return d.x_min * std::pow(1.0 - u * bp_norm(d), -1.0 / d.shape);
                          },
                          [&rng](const Pareto& d) { return d.x_min * std::pow(rng.uniform(), -1.0 / d.shape); },
                      },
                      law_);
}

double Distribution::sample_excess(Stream& rng) const {
    const double u = rng.uniform();
    if (const auto* d = std::get_if<Exponential>(&law_)) return -std::log(u) / d->rate;
    if (const auto* d = std::get_if<Deterministic>(&law_)) return u * d->value;
    // inverse transform by bisection on the (continuous, increasing) excess cdf
    double lo = 0.0, hi = std::max(mean_, 1e-300);
    while (excess_cdf(hi) < u && hi < effective_upper_) hi = std::min(2.0 * hi, effective_upper_);
    for (int i = 0; i < 100 && hi - lo > 1e-15 * hi; ++i) {
        const double m = 0.5 * (lo + hi);
        (excess_cdf(m) < u ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

Distribution Distribution::scaled(double c) const {
    require(c > 0 && std::isfinite(c), "scale factor must be positive");
    return std::visit(overloaded{
                          [c](const Exponential& d) { return Distribution(Exponential{d.rate / c}); },
                          [c](const Deterministic& d) { return Distribution(Deterministic{d.value * c}); },
                          [c](const Uniform& d) { return Distribution(Uniform{d.lo * c, d.hi * c}); },
                          [c](const Erlang& d) { return Distribution(Erlang{d.shape, d.rate / c}); },
                          [c](const HyperExponential& d) {
                              auto rates = d.rates;
                              for (double& r : rates) r /= c;
                              return Distribution(HyperExponential{d.probs, rates});
                          },
                          [c](const BoundedPareto& d) { return Distribution(BoundedPareto{d.shape, d.x_min * c, d.x_max * c}); },
                          [c](const Pareto& d) { return Distribution(Pareto{d.shape, d.x_min * c}); },
                      },
                      law_);
}

nlohmann::json Distribution::to_json() const {
    return std::visit(
        overloaded{
            [](const Exponential& d) { return nlohmann::json{{"kind", "exponential"}, {"rate", d.rate}}; },
            [](const Deterministic& d) { return nlohmann::json{{"kind", "deterministic"}, {"value", d.value}}; },
            [](const Uniform& d) { return nlohmann::json{{"kind", "uniform"}, {"lo", d.lo}, {"hi", d.hi}}; },
            [](const Erlang& d) { return nlohmann::json{{"kind", "erlang"}, {"shape", d.shape}, {"rate", d.rate}}; },
            [](const HyperExponential& d) {
                return nlohmann::json{{"kind", "hyperexp"}, {"probs", d.probs}, {"rates", d.rates}};
            },
            [](const BoundedPareto& d) {
                return nlohmann::json{{"kind", "bounded_pareto"}, {"shape", d.shape}, {"x_min", d.x_min}, {"x_max", d.x_max}};
            },
            [](const Pareto& d) { return nlohmann::json{{"kind", "pareto"}, {"shape", d.shape}, {"x_min", d.x_min}}; },
        },
        law_);
}

Distribution Distribution::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "exponential") return exponential(j.at("rate").get<double>());
    if (kind == "deterministic") return deterministic(j.at("value").get<double>());
    if (kind == "uniform") return uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "erlang") return erlang(j.at("shape").get<int>(), j.at("rate").get<double>());
    if (kind == "hyperexp")
        return hyperexponential(j.at("probs").get<std::vector<double>>(), j.at("rates").get<std::vector<double>>());
    if (kind == "bounded_pareto")
        return bounded_pareto(j.at("shape").get<double>(), j.at("x_min").get<double>(), j.at("x_max").get<double>());
    if (kind == "pareto") return pareto(j.at("shape").get<double>(), j.at("x_min").get<double>());
    throw std::invalid_argument("distribution: unknown kind '" + kind + "'");
}

SystemLaws instantiate_r(const HeavyTrafficFamily& fam, double r) {
    if (!(r > fam.lambda) || !(r > 0))
        throw std::domain_error("instantiate_r: need r > lambda and r > 0");
    const double target_rate = fam.beta() * (1.0 - fam.lambda / r);
    // interarrival law with mean 1 / target_rate, same shape as the limit law
    return {fam.arrival.scaled(fam.alpha() / target_rate), fam.service};
}

bool AssumptionReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
}

nlohmann::json AssumptionReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json v = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json("inf");
        arr.push_back({{"name", c.name}, {"passed", c.passed}, {"value", v}, {"detail", c.detail}});
    }
    return {{"all_passed", all_passed()}, {"checks", arr}};
}

namespace {

// cdf(0) = 0, nondecreasing on a grid, cdf near 1 at the far end
AssumptionCheck cdf_shape_check(const std::string& who, const Distribution& d) {
    const double hi = std::isfinite(d.support_upper()) ? d.support_upper() : d.effective_upper();
    bool ok = d.cdf(0.0) == 0.0;
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double c = d.cdf(hi * i / 1000.0);
        ok = ok && c >= prev && c >= 0.0 && c <= 1.0;
        prev = c;
    }
    ok = ok && std::abs(d.cdf(hi * 1.000001) - 1.0) <= 1e-12;
    return {who + "_cdf_shape", ok, d.cdf(0.0), "cdf(0) = 0, nondecreasing, reaches 1"};
}

}  // namespace

AssumptionReport validate_assumptions(const HeavyTrafficFamily& fam) {
    AssumptionReport rep;
    const double theta = fam.theta;
    rep.checks.push_back({"service_no_atom_at_zero", fam.service.cdf(0.0) == 0.0, fam.service.cdf(0.0), "nu({0}) = 0"});
    rep.checks.push_back(cdf_shape_check("service", fam.service));
    const double ms = fam.service.moment(4.0 + theta);
    rep.checks.push_back({"service_moment_4_plus_theta", std::isfinite(ms), ms, "<chi^{4+theta}, nu> < inf"});
    rep.checks.push_back({"arrival_positive_support", fam.arrival.cdf(0.0) == 0.0, fam.arrival.cdf(0.0), "P(u = 0) = 0"});
    rep.checks.push_back(cdf_shape_check("arrival", fam.arrival));
    const double ma = fam.arrival.moment(2.0 + theta);
    rep.checks.push_back({"arrival_moment_2_plus_theta", std::isfinite(ma), ma, "E[u_2^{2+theta}] < inf"});
    rep.checks.push_back({"first_arrival_mean_finite", std::isfinite(fam.arrival.mean()), fam.arrival.mean(),
                          "u_1 drawn from the interarrival law"});
    const double rho = fam.alpha() / fam.beta();
    rep.checks.push_back({"critical_limit_load", std::abs(rho - 1.0) <= 1e-9, rho, "rho = alpha / beta = 1"});
    rep.checks.push_back({"theta_positive", theta > 0, theta, "theta > 0"});
    return rep;
}

}  // namespace psq
