#include "psq/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "psq/fluid.hpp"
#include "psq/rbm.hpp"

namespace psq {
namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

constexpr double kSuccessFraction = 0.8;
constexpr double kCiLevel = 0.95;

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const auto nthreads = static_cast<std::size_t>(std::max(1, workers));
    if (nthreads == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(nthreads, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// ------------------------------------------------------------- collapse

std::vector<double> collapse_grid(const ExperimentConfig& cfg) {
    const double t0 = cfg.burn_in_fraction * cfg.horizon;
    std::vector<double> g(static_cast<std::size_t>(cfg.grid_points));
    for (int i = 0; i < cfg.grid_points; ++i)
        g[static_cast<std::size_t>(i)] = t0 + (cfg.horizon - t0) * i / (cfg.grid_points - 1);
    g.back() = cfg.horizon;
    return g;
}

SimPath collapse_path(const ExperimentConfig& cfg, double r, int replication) {
    SimOptions opt;
    opt.horizon = r * r * cfg.horizon;
    for (double t : collapse_grid(cfg)) opt.grid.push_back(std::min(r * r * t, opt.horizon));
    opt.max_events = cfg.max_events;
    const SimPath raw = run(cfg.family, r, opt, cfg.initial, cfg.seed, static_cast<std::uint64_t>(replication));
    return scaled_view(raw, r, ScaleMode::diffusion(), cfg.horizon);
}

SupMetric collapse_sup_metric(const SimPath& path, const std::shared_ptr<const Distribution>& nu,
                              const TestFunctionFamily& fam) {
    const MeasureProfile excess = profile(FiniteMeasure::parametric(nu, LawView::excess, 1.0), fam);
    const double me = nu->excess_mean();
    SupMetric best{0.0, path.samples.empty() ? 0.0 : path.samples.front().t};
    for (const auto& s : path.samples) {
        const MeasureProfile state = profile_unit_atoms(s.residuals, path.weight, fam);
        double w = 0.0;
        for (double x : s.residuals) w += x;
        w *= path.weight;
        const double d = metric_from_profiles(state, excess.scaled(w / me));
        if (d > best.value) best = {d, s.t};
    }
    return best;
}

CollapseReport run_collapse_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const TestFunctionFamily fam(cfg.k_max);
    const auto nu = std::make_shared<const Distribution>(cfg.family.service);
    const auto nrep = static_cast<std::size_t>(cfg.replications);
    CollapseReport rep;
    rep.replications.resize(cfg.r_list.size() * nrep);
    parallel_for(rep.replications.size(), cfg.workers, [&](std::size_t i) {
        ReplicationResult& out = rep.replications[i];
        out.r = cfg.r_list[i / nrep];
        out.replication = static_cast<int>(i % nrep);
        try {
            const SimPath p = collapse_path(cfg, out.r, out.replication);
            const SupMetric m = collapse_sup_metric(p, nu, fam);
            out.ok = true;
            out.sup_metric = m.value;
            out.argmax_t = m.argmax_t;
        } catch (const SimulationAborted& e) {
            out.ok = false;
            out.error = e.what();
        }
    });

    rep.enough_success = true;
    for (std::size_t k = 0; k < cfg.r_list.size(); ++k) {
        std::vector<double> vals;
        for (std::size_t j = 0; j < nrep; ++j)
            if (const auto& rr = rep.replications[k * nrep + j]; rr.ok) vals.push_back(rr.sup_metric);
        CollapseRow row{cfg.r_list[k], cfg.replications, static_cast<int>(vals.size()), {0.0, 0.0, 0.0}};
        if (!vals.empty())
            row.ci = bootstrap_mean_ci(vals, kCiLevel, cfg.bootstrap_resamples,
                                       Stream::keyed(cfg.seed, cfg.r_list[k], 0, StreamRole::bootstrap));
        if (static_cast<double>(vals.size()) < kSuccessFraction * cfg.replications) rep.enough_success = false;
        rep.per_r.push_back(row);
    }
    // smallest and largest r by value, not by list position
    const auto by_r = [](const CollapseRow& a, const CollapseRow& b) { return a.r < b.r; };
    const auto lo = std::min_element(rep.per_r.begin(), rep.per_r.end(), by_r);
    const auto hi = std::max_element(rep.per_r.begin(), rep.per_r.end(), by_r);
    rep.ci_separated = rep.per_r.size() > 1 && hi->ci.upper < lo->ci.lower;
    std::vector<CollapseRow> sorted = rep.per_r;
    std::sort(sorted.begin(), sorted.end(), by_r);
    rep.means_decreasing = sorted.size() > 1;
    for (std::size_t k = 1; k < sorted.size(); ++k)
        rep.means_decreasing = rep.means_decreasing && sorted[k].ci.mean < sorted[k - 1].ci.mean;
    return rep;
}

nlohmann::json CollapseReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : per_r)
        rows.push_back({{"r", r.r},
                        {"attempted", r.attempted},
                        {"succeeded", r.succeeded},
                        {"mean", r.ci.mean},
                        {"ci_lower", r.ci.lower},
                        {"ci_upper", r.ci.upper}});
    return {{"per_r", rows},
            {"enough_success", enough_success},
            {"means_decreasing", means_decreasing},
            {"ci_separated", ci_separated},
            {"passed", passed()},
            {"csv_columns", {"r", "replication", "ok", "sup_metric", "argmax_t"}}};
}

void CollapseReport::write_csv(std::ostream& out) const {
    out << "r,replication,ok,sup_metric,argmax_t\n";
    for (const auto& r : replications)
        out << fmt(r.r) << ',' << r.replication << ',' << (r.ok ? 1 : 0) << ',' << fmt(r.sup_metric) << ','
            << fmt(r.argmax_t) << '\n';
}

// ---------------------------------------------------------- steady state

double limit_queue_rate(const HeavyTrafficFamily& fam) {
    const double beta = fam.beta(), a = fam.a(), b = fam.b();
    return fam.lambda * (1.0 / (beta * beta) + b * b) / (a * a + b * b);
}

GofReport run_steady_state_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!(cfg.family.lambda > 0.0)) throw ConfigError("steady: lambda must be positive");
    const auto& fam = cfg.family;
    const auto nrep = static_cast<std::size_t>(cfg.replications);
    GofReport rep;
    std::vector<std::array<double, 4>> samples(cfg.r_list.size() * nrep);
    std::vector<char> ok(samples.size(), 0);
    parallel_for(samples.size(), cfg.workers, [&](std::size_t i) {
        const double r = cfg.r_list[i / nrep];
        const auto replication = static_cast<std::uint64_t>(i % nrep);
        SimOptions opt;
        opt.horizon = r * r * cfg.horizon;
        opt.grid = {opt.horizon};
        opt.max_events = cfg.max_events;
        try {
            const SimPath p = run(fam, r, opt, cfg.initial, cfg.seed, replication);
            const auto& s = p.samples.back();
            samples[i] = {r, static_cast<double>(replication), s.z / r, s.w / r};
            ok[i] = 1;
        } catch (const SimulationAborted&) {
        }
    });

    const RbmParams rbm = RbmParams::from_limits(fam.lambda, fam.alpha(), fam.a(), fam.beta(), fam.b());
    const double rate = limit_queue_rate(fam);
    for (std::size_t k = 0; k < cfg.r_list.size(); ++k) {
        const double r = cfg.r_list[k];
        std::vector<double> z, w;
        for (std::size_t j = 0; j < nrep; ++j) {
            if (!ok[k * nrep + j]) continue;
            rep.samples.push_back(samples[k * nrep + j]);
            z.push_back(samples[k * nrep + j][2]);
            w.push_back(samples[k * nrep + j][3]);
        }
        const bool enough = static_cast<double>(z.size()) >= kSuccessFraction * cfg.replications && z.size() >= 20;
        if (!enough) {
            rep.rates.push_back({r, static_cast<int>(z.size()), 0.0, rate, 1.0, false});
            continue;
        }
        rep.tests.push_back({"queue_length", r, "zstar_steady_cdf",
                             ks_statistic(z, [&](double x) { return zstar_steady_cdf(x, fam.lambda, fam.beta(), fam.a(), fam.b()); })});
        rep.tests.push_back({"workload", r, "rbm_steady_cdf", ks_statistic(w, [&](double x) { return rbm_steady_cdf(rbm, x); })});
        const double fitted = 1.0 / mean(z);
        const double err = std::abs(fitted - rate) / rate;
        rep.rates.push_back({r, static_cast<int>(z.size()), fitted, rate, err, err <= cfg.rate_tolerance});
    }
    return rep;
}

bool GofReport::passed() const {
    if (tests.empty()) return false;
    for (const auto& t : tests)
        if (!t.ks.passed()) return false;
    for (const auto& r : rates)
        if (!r.rate_ok) return false;
    return true;
}

nlohmann::json GofReport::to_json() const {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& e : tests)
        t.push_back({{"name", e.name},
                     {"r", e.r},
                     {"reference", e.reference},
                     {"statistic", e.ks.statistic},
                     {"n", e.ks.n},
                     {"critical_0.01", e.ks.critical},
                     {"passed", e.ks.passed()}});
    nlohmann::json r = nlohmann::json::array();
    for (const auto& e : rates)
        r.push_back({{"r", e.r},
                     {"succeeded", e.succeeded},
                     {"fitted_rate", e.fitted_rate},
                     {"limit_rate", e.limit_rate},
                     {"relative_error", e.rate_error},
                     {"passed", e.rate_ok}});
    return {{"tests", t}, {"rates", r}, {"passed", passed()}, {"csv_columns", {"r", "replication", "Z_hat", "W_hat"}}};
}

void GofReport::write_csv(std::ostream& out) const {
    out << "r,replication,Z_hat,W_hat\n";
    for (const auto& s : samples)
        out << fmt(s[0]) << ',' << static_cast<long long>(s[1]) << ',' << fmt(s[2]) << ',' << fmt(s[3]) << '\n';
}

// ---------------------------------------------------- fluid comparison

FluidComparisonRow compare_with_fluid(const SimPath& fluid_path, double m, double alpha,
                                      const std::shared_ptr<const Distribution>& nu, double L, double step,
                                      int grid_points, const TestFunctionFamily& fam) {
    FluidComparisonRow row{fluid_path.meta.r, m, false, 0.0, 0.0, 0.0, {}};
    const std::size_t i0 = fluid_path.index_at(m);
    const FiniteMeasure xi = fluid_path.measure(i0);
    FluidPath fp;
    try {
        fp = fluid_solve(xi, alpha, nu, L, step);
    } catch (const FluidSingularity& e) {
        row.error = e.what();
        return row;
    }
    const MeasureProfile excess = profile(FiniteMeasure::parametric(nu, LawView::excess, 1.0), fam);
    const double me = nu->excess_mean();
    auto manifold_distance = [&](const Snapshot& s, const MeasureProfile& state) {
        double w = 0.0;
        for (double x : s.residuals) w += x;
        return metric_from_profiles(state, excess.scaled(w * fluid_path.weight / me));
    };
    for (int k = 0; k < grid_points; ++k) {
        const double t = (k == grid_points - 1) ? L : L * k / (grid_points - 1);
        const Snapshot& s = fluid_path.samples[fluid_path.index_at(m + t)];
        const MeasureProfile state = profile_unit_atoms(s.residuals, fluid_path.weight, fam);
        const MeasureProfile fluid = profile(fluid_measure_at(fp, t), fam);
        row.path_distance = std::max(row.path_distance, metric_from_profiles(state, fluid));
        if (k == 0) row.manifold_start = manifold_distance(s, state);
        if (t >= L - 1.0 - 1e-12) row.manifold_end = std::max(row.manifold_end, manifold_distance(s, state));
    }
    row.ok = true;
    return row;
}

FluidComparisonReport run_fluid_comparison(const ExperimentConfig& cfg) {
    cfg.validate();
    const TestFunctionFamily fam(cfg.k_max);
    const auto nu = std::make_shared<const Distribution>(cfg.family.service);
    const double L = cfg.fluid_horizon;
    const int G = cfg.fluid_grid_points;
    FluidComparisonReport rep;

    // one simulated path per r, shifts spread over 0..floor(rT)
    std::vector<std::vector<double>> shifts(cfg.r_list.size());
    for (std::size_t k = 0; k < cfg.r_list.size(); ++k) {
        const double mmax = std::floor(cfg.r_list[k] * cfg.horizon);
        const int n = cfg.fluid_shifts;
        for (int i = 0; i < n; ++i) {
            const double m = n == 1 ? 0.0 : std::floor(mmax * i / (n - 1));
            if (shifts[k].empty() || shifts[k].back() != m) shifts[k].push_back(m);
        }
    }
    std::vector<std::pair<std::size_t, double>> tasks;
    for (std::size_t k = 0; k < shifts.size(); ++k)
        for (double m : shifts[k]) tasks.push_back({k, m});
    rep.rows.resize(tasks.size());

    std::vector<SimPath> paths(cfg.r_list.size());
    parallel_for(cfg.r_list.size(), cfg.workers, [&](std::size_t k) {
        const double r = cfg.r_list[k];
        std::vector<double> fluid_times;
        for (double m : shifts[k])
            for (int i = 0; i < G; ++i) fluid_times.push_back(i == G - 1 ? m + L : m + L * i / (G - 1));
        std::sort(fluid_times.begin(), fluid_times.end());
        fluid_times.erase(std::unique(fluid_times.begin(), fluid_times.end()), fluid_times.end());
        SimOptions opt;
        opt.horizon = r * fluid_times.back();
        for (double t : fluid_times) opt.grid.push_back(r * t);
        opt.max_events = cfg.max_events;
        paths[k] = scaled_view(run(cfg.family, r, opt, cfg.initial, cfg.seed, 0), r, ScaleMode::fluid());
    });
    parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
        const auto [k, m] = tasks[i];
        rep.rows[i] = compare_with_fluid(paths[k], m, cfg.family.alpha(), nu, L, cfg.fluid_step, G, fam);
    });

    std::vector<double> starts, ends;
    for (std::size_t k = 0; k < cfg.r_list.size(); ++k) {
        std::vector<double> d;
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (tasks[i].first == k && rep.rows[i].ok) {
                d.push_back(rep.rows[i].path_distance);
                starts.push_back(rep.rows[i].manifold_start);
                ends.push_back(rep.rows[i].manifold_end);
            }
        rep.median_distance.push_back({cfg.r_list[k], d.empty() ? std::nan("") : median(d)});
    }
    auto sorted = rep.median_distance;
    std::sort(sorted.begin(), sorted.end());
    rep.distance_decreasing = true;
    for (std::size_t k = 1; k < sorted.size(); ++k)
        rep.distance_decreasing = rep.distance_decreasing && sorted[k].second < sorted[k - 1].second;
    constexpr double kAttractionSlack = 0.05;
    rep.attraction = !starts.empty() && median(ends) <= median(starts) + kAttractionSlack;
    return rep;
}

nlohmann::json FluidComparisonReport::to_json() const {
    nlohmann::json med = nlohmann::json::array();
    for (const auto& [r, d] : median_distance) med.push_back({{"r", r}, {"median_path_distance", d}});
    return {{"median_distance", med},
            {"distance_decreasing", distance_decreasing},
            {"attraction", attraction},
            {"passed", passed()},
            {"csv_columns", {"r", "m", "ok", "path_distance", "manifold_start", "manifold_end"}}};
}

void FluidComparisonReport::write_csv(std::ostream& out) const {
    out << "r,m,ok,path_distance,manifold_start,manifold_end\n";
    for (const auto& r : rows)
        out << fmt(r.r) << ',' << fmt(r.m) << ',' << (r.ok ? 1 : 0) << ',' << fmt(r.path_distance) << ','
            << fmt(r.manifold_start) << ',' << fmt(r.manifold_end) << '\n';
}

// --------------------------------------------------------------- output

void write_reports(const ExperimentConfig& cfg, const CollapseReport* collapse, const GofReport* steady,
                   const FluidComparisonReport* fluid) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    nlohmann::json summary = {{"config", cfg.to_json()}, {"seed", cfg.seed}, {"grid_points", cfg.grid_points}};
    bool all = true;
    if (collapse) {
        std::ofstream out(dir / "collapse.csv");
        collapse->write_csv(out);
        summary["collapse"] = collapse->to_json();
        all = all && collapse->passed();
    }
    if (steady) {
        std::ofstream out(dir / "steady.csv");
        steady->write_csv(out);
        summary["steady"] = steady->to_json();
        all = all && steady->passed();
    }
    if (fluid) {
        std::ofstream out(dir / "fluid.csv");
        fluid->write_csv(out);
        summary["fluid"] = fluid->to_json();
        all = all && fluid->passed();
    }
    summary["all_passed"] = all;
    std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
}

}  // namespace psq
