// psq: processor-sharing heavy-traffic toolkit.
//
//   psq validate --config exp.json
//   psq simulate --config exp.json --out out/
//   psq fluid    --config exp.json --out out/
//   psq collapse --config exp.json --seed 7 --workers 4
//   psq steady   --config exp.json
//
// Exit codes: 0 all suites pass, 1 a suite failed, 2 configuration error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "psq/config.hpp"
#include "psq/fluid.hpp"
#include "psq/harness.hpp"
#include "psq/ps_sim.hpp"

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config (JSON)")->required();
    cmd->add_option("--seed", c.seed, "override the experiment seed");
    cmd->add_option("--out", c.out, "override the output directory");
    cmd->add_option("--workers", c.workers, "worker threads");
}

psq::ExperimentConfig load(const Common& c) {
    auto cfg = psq::ExperimentConfig::load(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.out) cfg.output_dir = *c.out;
    if (c.workers) cfg.workers = *c.workers;
    cfg.validate();
    return cfg;
}

int cmd_validate(const psq::ExperimentConfig& cfg) {
    const auto rep = psq::validate_assumptions(cfg.family);
    std::cout << rep.to_json().dump(2) << '\n';
    return rep.all_passed() ? 0 : 1;
}

int cmd_simulate(const psq::ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const double r = cfg.r_list.front();
    psq::SimOptions opt;
    opt.horizon = r * r * cfg.horizon;
    for (int i = 0; i < cfg.grid_points; ++i) opt.grid.push_back(opt.horizon * i / (cfg.grid_points - 1));
    opt.grid.back() = opt.horizon;
    opt.max_events = cfg.max_events;
    const auto path = psq::run(cfg.family, r, opt, cfg.initial, cfg.seed, 0);
    fs::create_directories(cfg.output_dir);
    std::ofstream series(fs::path(cfg.output_dir) / "path.csv");
    std::ofstream atoms(fs::path(cfg.output_dir) / "path_atoms.csv");
    psq::write_csv(path, series, atoms);
    std::ofstream bin(fs::path(cfg.output_dir) / "path.bin", std::ios::binary);
    psq::write_binary(path, bin);
    std::cout << "simulated r = " << r << " to t = " << opt.horizon << " (" << path.samples.size() << " samples)\n";
    return 0;
}

int cmd_fluid(const psq::ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    // fluid path from the configured initial condition, read at fluid scale
    const auto nu = std::make_shared<const psq::Distribution>(cfg.family.service);
    psq::FiniteMeasure xi;
    if (cfg.initial.kind == psq::InitialCondition::Kind::atoms) xi = psq::FiniteMeasure::unit_atoms(cfg.initial.atoms);
    if (cfg.initial.kind == psq::InitialCondition::Kind::manifold) xi = psq::lift(cfg.initial.workload, nu);
    const auto fp = psq::fluid_solve(xi, cfg.family.alpha(), nu, cfg.fluid_horizon, cfg.fluid_step);
    fs::create_directories(cfg.output_dir);
    std::ofstream out(fs::path(cfg.output_dir) / "fluid_path.csv");
    psq::write_csv(fp, out);

    const auto rep = psq::run_fluid_comparison(cfg);
    psq::write_reports(cfg, nullptr, nullptr, &rep);
    std::cout << rep.to_json().dump(2) << '\n';
    return rep.passed() ? 0 : 1;
}

int cmd_collapse(const psq::ExperimentConfig& cfg) {
    const auto rep = psq::run_collapse_experiment(cfg);
    psq::write_reports(cfg, &rep, nullptr, nullptr);
    std::cout << rep.to_json().dump(2) << '\n';
    return rep.passed() ? 0 : 1;
}

int cmd_steady(const psq::ExperimentConfig& cfg) {
    const auto rep = psq::run_steady_state_experiment(cfg);
    psq::write_reports(cfg, nullptr, &rep, nullptr);
    std::cout << rep.to_json().dump(2) << '\n';
    return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"processor-sharing heavy-traffic simulator and fluid solver"};
    app.require_subcommand(1);
    Common common;
    auto* validate = app.add_subcommand("validate", "check the heavy-traffic assumptions of a config");
    auto* simulate = app.add_subcommand("simulate", "simulate one path and export it");
    auto* fluid = app.add_subcommand("fluid", "solve the fluid model and compare it with shifted fluid views");
    auto* collapse = app.add_subcommand("collapse", "state space collapse experiment");
    auto* steady = app.add_subcommand("steady", "steady-state goodness-of-fit experiment");
    for (auto* c : {validate, simulate, fluid, collapse, steady}) add_common(c, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const auto cfg = load(common);
        if (*validate) return cmd_validate(cfg);
        if (*simulate) return cmd_simulate(cfg);
        if (*fluid) return cmd_fluid(cfg);
        if (*collapse) return cmd_collapse(cfg);
        if (*steady) return cmd_steady(cfg);
    } catch (const psq::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
