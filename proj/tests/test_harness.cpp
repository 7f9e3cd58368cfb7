#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "psq/config.hpp"
#include "psq/harness.hpp"
#include "psq/rbm.hpp"

using Catch::Approx;
using psq::Distribution;
using psq::ExperimentConfig;

namespace {

ExperimentConfig small_collapse() {
    ExperimentConfig c;
    c.r_list = {4.0, 8.0};
    c.horizon = 1.5;
    c.grid_points = 20;
    c.replications = 6;
    c.bootstrap_resamples = 200;
    c.seed = 11;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("parallel_for visits every index once and propagates failures") {
    for (int workers : {1, 3, 8}) {
        std::vector<std::atomic<int>> hits(100);
        psq::parallel_for(100, workers, [&](std::size_t i) { ++hits[i]; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK_THROWS_AS(psq::parallel_for(10, 2,
                                      [](std::size_t i) {
                                          if (i == 7) throw std::runtime_error("boom");
                                      }),
                    std::runtime_error);
}

TEST_CASE("collapse grid excludes the burn-in window") {
    auto c = small_collapse();
    const auto g = psq::collapse_grid(c);
    REQUIRE(g.size() == 20);
    CHECK(g.front() == Approx(0.05 * 1.5));
    CHECK(g.back() == 1.5);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

TEST_CASE("collapse metric is zero on an empty system without arrivals") {
    psq::ScriptedArrivals none({});
    psq::SimOptions opt;
    opt.horizon = 2.0;
    opt.grid = {0.0, 1.0, 2.0};
    auto raw = psq::simulate({}, none, opt);
    const auto view = psq::scaled_view(raw, 1.0, psq::ScaleMode::diffusion());
    const auto nu = std::make_shared<const Distribution>(Distribution::exponential(1.0));
    const auto m = psq::collapse_sup_metric(view, nu, psq::TestFunctionFamily{});
    CHECK(m.value == 0.0);
}

TEST_CASE("manifold start sits closer to the lifted workload as r grows") {
    const psq::HeavyTrafficFamily fam{Distribution::exponential(1.0), Distribution::exponential(1.0), 0.0, 0.5};
    const auto nu = std::make_shared<const Distribution>(fam.service);
    const psq::TestFunctionFamily tf;
    const auto ic = psq::InitialCondition::parse("manifold(1)");
    std::vector<double> means;
    for (double r : {10.0, 100.0, 1000.0}) {
        double sum = 0;
        for (int rep = 0; rep < 5; ++rep) {
            psq::SimOptions opt;
            opt.horizon = 1.0;
            opt.grid = {0.0};
            const auto raw = psq::run(fam, r, opt, ic, 5, static_cast<std::uint64_t>(rep));
            const auto view = psq::scaled_view(raw, r, psq::ScaleMode::diffusion());
            const auto m = psq::collapse_sup_metric(view, nu, tf);
            // from scratch
            const auto state = view.measure(0);
            const double w = psq::integrate(psq::TestFunction::identity(), state);
            CHECK(m.value == Approx(psq::metric_d(state, psq::lift(w, nu), tf)).epsilon(1e-9).margin(1e-12));
            sum += m.value;
        }
        means.push_back(sum / 5);
    }
    CHECK(means[1] < means[0]);
    CHECK(means[2] < means[1]);
}

TEST_CASE("collapse report metrics can be recomputed from the archived paths") {
    const auto cfg = small_collapse();
    const auto rep = psq::run_collapse_experiment(cfg);
    REQUIRE(rep.replications.size() == 12);
    const auto nu = std::make_shared<const Distribution>(cfg.family.service);
    const psq::TestFunctionFamily tf;
    for (const auto& rr : rep.replications) {
        REQUIRE(rr.ok);
        CHECK(rr.sup_metric >= 0.0);
        const auto path = psq::collapse_path(cfg, rr.r, rr.replication);
        double best = 0;
        for (std::size_t i = 0; i < path.samples.size(); ++i) {
            const auto state = path.measure(i);
            const double w = psq::integrate(psq::TestFunction::identity(), state);
            const auto lifted = psq::lift(w, nu);
            CHECK(std::abs(psq::integrate(psq::TestFunction::identity(), lifted) - w) <= 1e-9);
            best = std::max(best, psq::metric_d(state, lifted, tf));
        }
        CHECK(rr.sup_metric == Approx(best).epsilon(1e-9));
    }
    CHECK(rep.enough_success);
    for (const auto& row : rep.per_r) {
        CHECK(row.ci.lower <= row.ci.mean);
        CHECK(row.ci.mean <= row.ci.upper);
    }
}

TEST_CASE("worker count does not change results") {
    auto a = small_collapse();
    auto b = small_collapse();
    b.workers = 4;
    CHECK(psq::run_collapse_experiment(a).to_json() == psq::run_collapse_experiment(b).to_json());
}

TEST_CASE("event cap marks replications failed") {
    auto c = small_collapse();
    c.max_events = 10;
    const auto rep = psq::run_collapse_experiment(c);
    CHECK_FALSE(rep.enough_success);
    CHECK_FALSE(rep.passed());
    for (const auto& rr : rep.replications) {
        CHECK_FALSE(rr.ok);
        CHECK_FALSE(rr.error.empty());
    }
}

TEST_CASE("steady suite needs positive lambda") {
    ExperimentConfig c;
    c.family.lambda = 0.0;
    CHECK_THROWS_AS(psq::run_steady_state_experiment(c), psq::ConfigError);
}

TEST_CASE("samples from the limit law pass the goodness-of-fit test about 99% of the time") {
    int passed = 0;
    const int runs = 400;
    for (int k = 0; k < runs; ++k) {
        psq::Stream rng(k + 1);
        std::vector<double> xs(2000);
        for (auto& x : xs) x = -std::log(rng.uniform());
        if (psq::ks_statistic(xs, [](double x) { return psq::zstar_steady_cdf(x, 1.0, 1.0, 1.0, 1.0); }).passed()) ++passed;
    }
    CHECK(passed >= runs * 0.99 - 3 * std::sqrt(runs * 0.01 * 0.99));
}

TEST_CASE("steady state with deterministic service") {
    ExperimentConfig c;
    c.family = {Distribution::exponential(1.0), Distribution::deterministic(1.0), 1.0, 0.5};
    c.r_list = {20.0};
    c.horizon = 10.0;
    c.replications = 1000;
    c.seed = 3;
    c.suites = {"steady"};
    c.rate_tolerance = 0.15;
    const auto rep = psq::run_steady_state_experiment(c);
    REQUIRE(rep.rates.size() == 1);
    CHECK(rep.rates[0].limit_rate == Approx(1.0));
    CHECK(rep.rates[0].rate_error <= 0.15);
    CHECK(rep.tests.size() == 2);
    CHECK(rep.samples.size() == 1000);
}

TEST_CASE("limit queue rate") {
    const psq::HeavyTrafficFamily fam{Distribution::erlang(2, 2.0), Distribution::hyperexponential({0.5, 0.5}, {1.0, 3.0}),
                                      2.0, 0.5};
    const double beta = fam.beta(), a = fam.a(), b = fam.b();
    CHECK(psq::limit_queue_rate(fam) == Approx(2.0 * (1 / (beta * beta) + b * b) / (a * a + b * b)));
}

TEST_CASE("simulator and fluid model agree on a single deterministic job") {
    psq::ScriptedArrivals none({});
    psq::SimOptions opt;
    opt.horizon = 2.0;
    for (int i = 0; i <= 20; ++i) opt.grid.push_back(0.1 * i);
    opt.grid.back() = 2.0;
    const std::vector<double> init{3.0};
    auto raw = psq::simulate(init, none, opt);
    raw.meta.r = 1.0;
    const auto view = psq::scaled_view(raw, 1.0, psq::ScaleMode::fluid());
    const auto nu = std::make_shared<const Distribution>(Distribution::deterministic(1.0));
    const auto row = psq::compare_with_fluid(view, 0.0, 0.0, nu, 2.0, 0.02, 11, psq::TestFunctionFamily{});
    REQUIRE(row.ok);
    CHECK(row.path_distance <= 1e-9);
}

TEST_CASE("fluid comparison on M/M/1") {
    ExperimentConfig c;
    c.r_list = {10.0, 40.0};
    c.fluid_horizon = 5.0;
    c.fluid_shifts = 10;
    c.seed = 2;
    c.initial = psq::InitialCondition::parse("manifold(1)");
    c.suites = {"fluid"};
    const auto rep = psq::run_fluid_comparison(c);
    CHECK(rep.rows.size() == 20);
    for (const auto& row : rep.rows) CHECK(row.ok);
    CHECK(rep.median_distance.size() == 2);
    CHECK(rep.distance_decreasing);
    CHECK(rep.attraction);
    CHECK(rep.passed());
}

TEST_CASE("reports land in the output directory") {
    namespace fs = std::filesystem;
    auto c = small_collapse();
    c.output_dir = (fs::temp_directory_path() / "psq_harness_reports").string();
    fs::remove_all(c.output_dir);
    const auto rep = psq::run_collapse_experiment(c);
    psq::write_reports(c, &rep, nullptr, nullptr);
    CHECK(fs::exists(fs::path(c.output_dir) / "collapse.csv"));
    const auto summary = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "summary.json"));
    CHECK(summary.at("collapse").at("passed") == rep.passed());
    CHECK(summary.at("all_passed") == rep.passed());
    CHECK(summary.at("config") == c.to_json());
    CHECK(slurp(fs::path(c.output_dir) / "collapse.csv").rfind("r,replication,ok,sup_metric,argmax_t\n", 0) == 0);
    fs::remove_all(c.output_dir);
}

TEST_CASE("config round trip is byte-identical") {
    ExperimentConfig c;
    c.family = {Distribution::erlang(2, 2.0), Distribution::hyperexponential({0.25, 0.75}, {0.5, 3.0}), 1.5, 0.7};
    c.r_list = {12.5, 50.0};
    c.initial = psq::InitialCondition::parse("atoms(0.5,1.25)");
    c.suites = {"collapse", "steady", "fluid"};
    c.seed = 18446744073709551615ull;
    const auto text = c.serialize();
    CHECK(ExperimentConfig::parse(text).serialize() == text);
    const auto d = ExperimentConfig{};
    CHECK(ExperimentConfig::parse(d.serialize()).serialize() == d.serialize());
}

TEST_CASE("config validation") {
    auto bad = [](auto mutate) {
        ExperimentConfig c;
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(bad([](auto& c) { c.horizon = 1.0; }).validate(), psq::ConfigError);
    CHECK_THROWS_AS(bad([](auto& c) { c.r_list = {}; }).validate(), psq::ConfigError);
    CHECK_THROWS_AS(bad([](auto& c) {
                        c.family.lambda = 5.0;
                        c.r_list = {5.0};
                    }).validate(),
                    psq::ConfigError);
    CHECK_THROWS_AS(bad([](auto& c) { c.replications = 0; }).validate(), psq::ConfigError);
    CHECK_THROWS_AS(bad([](auto& c) { c.suites = {"everything"}; }).validate(), psq::ConfigError);
    CHECK_THROWS_AS(bad([](auto& c) { c.fluid_step = 1.0; }).validate(), psq::ConfigError);
    CHECK_NOTHROW(ExperimentConfig{}.validate());

    CHECK_THROWS_AS(ExperimentConfig::parse("{not json"), psq::ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"j({"replicatons": 3})j"), psq::ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"j({"initial": "lattice(2)"})j"), psq::ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"j({"family": {"service": {"kind": "cauchy"}}})j"), psq::ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"j({"r_list": "ten"})j"), psq::ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), psq::ConfigError);
    const auto c = ExperimentConfig::parse(R"j({"r_list": [5, 6], "seed": 4})j");
    CHECK(c.r_list == std::vector<double>{5.0, 6.0});
    CHECK(c.seed == 4);
    CHECK(c.horizon == 2.0);
}
