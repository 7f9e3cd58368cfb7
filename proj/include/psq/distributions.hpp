#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "psq/rng.hpp"

namespace psq {

struct Exponential {
    double rate;
};
struct Deterministic {
    double value;
};
struct Uniform {
    double lo, hi;
};
struct Erlang {
    int shape;
    double rate;
};
struct HyperExponential {
    std::vector<double> probs;
    std::vector<double> rates;
};
/// Pareto law with density proportional to x^{-shape-1} on [x_min, x_max].
struct BoundedPareto {
    double shape, x_min, x_max;
};
/// Unbounded Pareto; finite moments only below `shape`.
struct Pareto {
    double shape, x_min;
};

/// A probability law on (0, inf) used for service requirements and
/// interarrival times. Immutable value type; every member is a pure function.
class Distribution {
public:
    using Law = std::variant<Exponential, Deterministic, Uniform, Erlang, HyperExponential, BoundedPareto, Pareto>;

    explicit Distribution(Law law);

    static Distribution exponential(double rate) { return Distribution(Exponential{rate}); }
    static Distribution deterministic(double value) { return Distribution(Deterministic{value}); }
    static Distribution uniform(double lo, double hi) { return Distribution(Uniform{lo, hi}); }
    static Distribution erlang(int shape, double rate) { return Distribution(Erlang{shape, rate}); }
    static Distribution hyperexponential(std::vector<double> probs, std::vector<double> rates) {
        return Distribution(HyperExponential{std::move(probs), std::move(rates)});
    }
    static Distribution bounded_pareto(double shape, double x_min, double x_max) {
        return Distribution(BoundedPareto{shape, x_min, x_max});
    }
    static Distribution pareto(double shape, double x_min) { return Distribution(Pareto{shape, x_min}); }

    const Law& law() const { return law_; }
    std::string kind() const;

    double mean() const { return mean_; }
    /// 1 / mean, the service rate beta (or arrival rate alpha).
    double rate() const { return 1.0 / mean_; }
    double second_moment() const { return second_moment_; }
    double stddev() const;
    /// E[X^p] for p >= 0; +inf when the moment diverges.
    double moment(double p) const;

    double cdf(double x) const;
    /// P(X > x).
    double tail(double x) const;
    /// Lebesgue density; zero for purely atomic laws.
    double density(double x) const;
    /// Location of the single atom of a deterministic law.
    std::optional<double> atom() const;
    bool atomic() const { return atom().has_value(); }

    double support_lower() const;
    /// Right end of the support; +inf when unbounded.
    double support_upper() const;
    /// Finite point beyond which the tail is below 1e-18.
    double effective_upper() const { return effective_upper_; }
    /// Points where the density is not smooth (support endpoints).
    std::vector<double> breakpoints() const;

    /// E[(X - s)^+] = integral of the tail over [s, inf).
    double integrated_tail(double s) const;

    /// Equilibrium (excess) law: density tail(x) / mean.
    double excess_cdf(double x) const;
    double excess_tail(double x) const { return 1.0 - excess_cdf(x); }
    double excess_density(double x) const { return tail(x) / mean_; }
    /// Mean of the excess law, E[X^2] / (2 E[X]).
    double excess_mean() const;
    /// Integral of the excess tail over [s, inf).
    double excess_integrated_tail(double s) const;

    double sample(Stream& rng) const;
    /// Draw from the excess law nu_e.
    double sample_excess(Stream& rng) const;

    /// Law of c * X.
    Distribution scaled(double c) const;

    nlohmann::json to_json() const;
    static Distribution from_json(const nlohmann::json& j);

private:
    Law law_;
    double mean_ = 0.0;
    double second_moment_ = 0.0;
    double effective_upper_ = 0.0;
};

/// Heavy-traffic sequence of GI/GI/1 systems indexed by r.
struct HeavyTrafficFamily {
    Distribution arrival;  // limit interarrival law, mean 1/alpha
    Distribution service;  // nu, held fixed for every r
    double lambda = 0.0;
    double theta = 0.5;

    double alpha() const { return arrival.rate(); }
    double beta() const { return service.rate(); }
    double a() const { return arrival.stddev(); }
    double b() const { return service.stddev(); }
};

struct SystemLaws {
    Distribution interarrival;
    Distribution service;
    double arrival_rate() const { return interarrival.rate(); }
    double rho() const { return interarrival.rate() / service.rate(); }
};

/// Laws of the r-th system: service fixed, arrival rate beta (1 - lambda / r).
SystemLaws instantiate_r(const HeavyTrafficFamily& fam, double r);

struct AssumptionCheck {
    std::string name;
    bool passed;
    double value;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_passed() const;
    nlohmann::json to_json() const;
};

AssumptionReport validate_assumptions(const HeavyTrafficFamily& fam);

}  // namespace psq
