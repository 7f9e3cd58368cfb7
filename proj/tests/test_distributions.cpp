#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "psq/distributions.hpp"
#include "psq/stats.hpp"

using Catch::Approx;
using psq::Distribution;

namespace {

std::vector<Distribution> catalog() {
    return {Distribution::exponential(1.0),
            Distribution::exponential(2.5),
            Distribution::deterministic(1.0),
            Distribution::uniform(0.5, 1.5),
            Distribution::erlang(3, 3.0),
            Distribution::hyperexponential({0.5, 0.5}, {1.0, 2.0}),
            Distribution::bounded_pareto(1.5, 0.2, 10.0),
            Distribution::pareto(6.0, 1.0)};
}

Distribution hyper() { return Distribution::hyperexponential({0.5, 0.5}, {1.0, 2.0}); }

}  // namespace

TEST_CASE("excess cdf examples") {
    CHECK(Distribution::exponential(1.0).excess_cdf(1.0) == Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(Distribution::deterministic(1.0).excess_cdf(0.5) == Approx(0.5).epsilon(1e-12));
    const auto h = hyper();
    const double want = oracle::excess_cdf([&](double y) { return h.tail(y); }, h.rate(), 1.0);
    CHECK(h.excess_cdf(1.0) == Approx(want).epsilon(1e-10));
}

TEST_CASE("excess cdf matches the closed forms on a fine grid") {
    const auto e = Distribution::exponential(1.0);
    const auto e3 = Distribution::exponential(3.0);
    const auto d = Distribution::deterministic(1.0);
    double err = 0;
    for (int i = 0; i <= 4000; ++i) {
        const double x = i * 0.005;
        err = std::max(err, std::abs(e.excess_cdf(x) - (1.0 - std::exp(-x))));
        err = std::max(err, std::abs(e3.excess_cdf(x) - (1.0 - std::exp(-3 * x))));
        err = std::max(err, std::abs(d.excess_cdf(x) - std::min(x, 1.0)));
    }
    REQUIRE(err <= 1e-8);
}

TEST_CASE("excess cdf agrees with the defining integral for every catalog law") {
    for (const auto& d : catalog()) {
        INFO(d.kind());
        for (double x : {0.1, 0.7, 1.3, 2.9, 6.0}) {
            const double want = oracle::excess_cdf([&](double y) { return d.tail(y); }, d.rate(), x, 20000, d.breakpoints());
            CHECK(d.excess_cdf(x) == Approx(want).margin(1e-8));
        }
        double prev = 0;
        for (int i = 0; i <= 200; ++i) {
            const double v = d.excess_cdf(i * 0.1);
            CHECK(v >= prev - 1e-15);
            prev = v;
        }
        CHECK(d.excess_cdf(d.effective_upper() * 2) == Approx(1.0).margin(1e-8));
    }
}

TEST_CASE("excess mean examples") {
    CHECK(Distribution::exponential(1.0).excess_mean() == Approx(1.0).epsilon(1e-14));
    CHECK(Distribution::deterministic(1.0).excess_mean() == Approx(0.5).epsilon(1e-14));
    const auto h = hyper();
    CHECK(h.mean() == Approx(0.75).epsilon(1e-14));
    CHECK(h.second_moment() == Approx(1.25).epsilon(1e-14));
    CHECK(h.excess_mean() == Approx(5.0 / 6.0).margin(1e-8));
}

TEST_CASE("excess mean equals the first moment of the excess density") {
    for (const auto& d : catalog()) {
        if (d.atomic()) continue;
        INFO(d.kind());
        const double hi = d.effective_upper();
        const double want = oracle::gauss_legendre([&](double x) { return x * d.tail(x) / d.mean(); }, 0.0, hi, 40000);
        CHECK(d.excess_mean() == Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("infinite second moment is rejected by excess_mean") {
    REQUIRE_THROWS_AS(Distribution::pareto(1.8, 1.0).excess_mean(), std::domain_error);
}

TEST_CASE("integrated tail agrees with quadrature") {
    for (const auto& d : catalog()) {
        INFO(d.kind());
        for (double s : {0.0, 0.3, 1.0, 2.5}) {
            const double hi = d.effective_upper();
            const double want = s >= hi ? 0.0 : oracle::gauss_legendre_split([&](double y) { return d.tail(y); }, s, hi, d.breakpoints(), 20000);
            CHECK(d.integrated_tail(s) == Approx(want).margin(1e-9));
        }
    }
}

TEST_CASE("sampler examples") {
    psq::Stream rng(5);
    const auto det = Distribution::deterministic(1.0);
    for (int i = 0; i < 100; ++i) REQUIRE(det.sample(rng) == 1.0);

    const auto e = Distribution::exponential(1.0);
    double sum = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) sum += e.sample(rng);
    REQUIRE(std::abs(sum / n - 1.0) < 0.005);

    const auto bp = Distribution::bounded_pareto(1.5, 0.2, 10.0);
    for (int i = 0; i < 100000; ++i) {
        const double x = bp.sample(rng);
        REQUIRE(x >= 0.2);
        REQUIRE(x <= 10.0);
    }
}

TEST_CASE("cached mean and standard deviation agree with Monte Carlo") {
    const int n = 1'000'000;
    std::uint64_t key = 100;
    for (const auto& d : catalog()) {
        INFO(d.kind());
        psq::Stream rng(key++);
        double s1 = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = d.sample(rng);
            s1 += x;
            s2 += x * x;
        }
        const double m = s1 / n;
        const double var = s2 / n - m * m;
        const double b2 = d.stddev() * d.stddev();
        CHECK(std::abs(m - d.mean()) <= 5 * d.stddev() / std::sqrt(n) + 1e-15);
        // standard error of the sample variance from the fourth central moment
        const double mu = d.mean();
        const double m4 = d.moment(4) - 4 * mu * d.moment(3) + 6 * mu * mu * d.moment(2) - 3 * std::pow(mu, 4);
        CHECK(std::abs(var - b2) <= 5 * std::sqrt(std::max(m4 - b2 * b2, 0.0) / n) + 1e-12);
    }
}

TEST_CASE("excess sampler follows the excess law") {
    std::uint64_t key = 300;
    for (const auto& d : catalog()) {
        INFO(d.kind());
        psq::Stream rng(key++);
        std::vector<double> xs(4000);
        for (auto& x : xs) x = d.sample_excess(rng);
        const auto ks = psq::ks_statistic(xs, [&](double x) { return d.excess_cdf(x); });
        CHECK(ks.passed());
    }
}

TEST_CASE("scaled laws") {
    const auto h = hyper().scaled(2.0);
    CHECK(h.mean() == Approx(1.5));
    CHECK(h.tail(2.0) == Approx(hyper().tail(1.0)));
    CHECK(Distribution::deterministic(1.0).scaled(3.0).atom().value() == Approx(3.0));
}

TEST_CASE("json round trip preserves every catalog law") {
    for (const auto& d : catalog()) {
        const auto back = Distribution::from_json(d.to_json());
        CHECK(back.to_json() == d.to_json());
        CHECK(back.mean() == d.mean());
    }
    CHECK_THROWS(Distribution::from_json(nlohmann::json{{"kind", "lognormal"}}));
    CHECK_THROWS(Distribution::from_json(nlohmann::json{{"kind", "exponential"}, {"rate", -1.0}}));
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS(Distribution::exponential(0.0));
    CHECK_THROWS(Distribution::deterministic(0.0));
    CHECK_THROWS(Distribution::uniform(1.0, 1.0));
    CHECK_THROWS(Distribution::hyperexponential({0.3, 0.3}, {1.0, 2.0}));
    CHECK_THROWS(Distribution::bounded_pareto(1.5, 2.0, 1.0));
}

TEST_CASE("instantiate_r examples") {
    const psq::HeavyTrafficFamily crit{Distribution::exponential(1.0), Distribution::exponential(1.0), 0.0, 0.5};
    for (double r : {1.0, 10.0, 40.0}) CHECK(psq::instantiate_r(crit, r).arrival_rate() == Approx(1.0).epsilon(1e-15));

    const psq::HeavyTrafficFamily fam{Distribution::exponential(1.0), Distribution::exponential(1.0), 1.0, 0.5};
    const auto s10 = psq::instantiate_r(fam, 10.0);
    CHECK(s10.arrival_rate() == Approx(0.9).epsilon(1e-14));
    CHECK(s10.rho() == Approx(0.9).epsilon(1e-14));
    CHECK(psq::instantiate_r(fam, 40.0).rho() == Approx(0.975).epsilon(1e-14));
    for (double r : {2.0, 3.7, 10.0, 123.0}) CHECK(r * (1 - psq::instantiate_r(fam, r).rho()) == Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(psq::instantiate_r(fam, 1.0), std::domain_error);
    CHECK_THROWS_AS(psq::instantiate_r(fam, 0.5), std::domain_error);
}

TEST_CASE("service law is held fixed across r") {
    const psq::HeavyTrafficFamily fam{Distribution::erlang(2, 2.0), hyper(), 1.0, 0.5};
    const auto s = psq::instantiate_r(fam, 7.0);
    CHECK(s.service.to_json() == fam.service.to_json());
}

TEST_CASE("assumption report examples") {
    auto fam_with = [](Distribution service) {
        return psq::HeavyTrafficFamily{Distribution::exponential(service.rate()), service, 0.0, 0.5};
    };
    CHECK(psq::validate_assumptions(fam_with(Distribution::exponential(1.0))).all_passed());
    CHECK(psq::validate_assumptions(fam_with(Distribution::bounded_pareto(1.5, 0.2, 10.0))).all_passed());
    const auto bad = psq::validate_assumptions(fam_with(Distribution::pareto(3.0, 1.0)));
    CHECK_FALSE(bad.all_passed());
    bool saw = false;
    for (const auto& c : bad.checks)
        if (c.name == "service_moment_4_plus_theta") {
            saw = true;
            CHECK_FALSE(c.passed);
            CHECK(std::isinf(c.value));
        }
    CHECK(saw);
    CHECK(bad.to_json().is_object());

    const psq::HeavyTrafficFamily off{Distribution::exponential(2.0), Distribution::exponential(1.0), 0.0, 0.5};
    CHECK_FALSE(psq::validate_assumptions(off).all_passed());
}

TEST_CASE("cdf shape on a grid") {
    for (const auto& d : catalog()) {
        CHECK(d.cdf(0.0) == 0.0);
        double prev = 0;
        for (int i = 1; i <= 500; ++i) {
            const double v = d.cdf(i * 0.05);
            CHECK(v >= prev);
            prev = v;
        }
        CHECK(d.cdf(d.effective_upper() * 1.01) == Approx(1.0).margin(1e-15));
    }
}
