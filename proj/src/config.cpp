#include "psq/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace psq {

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (!(horizon > 1.0)) fail("horizon T must exceed 1");
    if (r_list.empty()) fail("r_list must not be empty");
    for (double r : r_list)
        if (!(r > family.lambda) || !(r > 0.0)) fail("every r must exceed lambda");
    if (replications < 1) fail("replications must be >= 1");
    if (grid_points < 2) fail("grid_points must be >= 2");
    if (workers < 1) fail("workers must be >= 1");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) fail("burn_in_fraction must lie in [0, 1)");
    if (bootstrap_resamples < 1) fail("bootstrap_resamples must be >= 1");
    if (k_max < 1) fail("k_max must be >= 1");
    if (!(rate_tolerance > 0.0)) fail("rate_tolerance must be positive");
    if (!(fluid_horizon > 1.0)) fail("fluid_horizon L must exceed 1");
    if (!(fluid_step > 0.0) || fluid_step > 1e-2 * fluid_horizon * (1.0 + 1e-9)) fail("fluid_step must lie in (0, L/100]");
    if (fluid_shifts < 1 || fluid_grid_points < 2) fail("fluid_shifts >= 1 and fluid_grid_points >= 2 required");
    if (!(family.theta > 0.0)) fail("theta must be positive");
    for (const auto& s : suites)
        if (s != "collapse" && s != "steady" && s != "fluid") fail("unknown suite '" + s + "'");
}

nlohmann::json ExperimentConfig::to_json() const {
    return {
        {"family",
         {{"arrival", family.arrival.to_json()},
          {"service", family.service.to_json()},
          {"lambda", family.lambda},
          {"theta", family.theta}}},
        {"r_list", r_list},
        {"horizon", horizon},
        {"grid_points", grid_points},
        {"replications", replications},
        {"seed", seed},
        {"initial", initial.to_string()},
        {"output_dir", output_dir},
        {"suites", suites},
        {"workers", workers},
        {"burn_in_fraction", burn_in_fraction},
        {"bootstrap_resamples", bootstrap_resamples},
        {"k_max", k_max},
        {"rate_tolerance", rate_tolerance},
        {"fluid_horizon", fluid_horizon},
        {"fluid_step", fluid_step},
        {"fluid_shifts", fluid_shifts},
        {"fluid_grid_points", fluid_grid_points},
        {"max_events", max_events},
    };
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    static const std::vector<std::string> known{
        "family",        "r_list",          "horizon",        "grid_points",         "replications",
        "seed",          "initial",         "output_dir",     "suites",              "workers",
        "burn_in_fraction", "bootstrap_resamples", "k_max",   "rate_tolerance",      "fluid_horizon",
        "fluid_step",    "fluid_shifts",    "fluid_grid_points", "max_events"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("config: unknown key '" + key + "'");
    try {
        if (j.contains("family")) {
            const auto& f = j.at("family");
            if (f.contains("arrival")) c.family.arrival = Distribution::from_json(f.at("arrival"));
            if (f.contains("service")) c.family.service = Distribution::from_json(f.at("service"));
            c.family.lambda = f.value("lambda", c.family.lambda);
            c.family.theta = f.value("theta", c.family.theta);
        }
        c.r_list = j.value("r_list", c.r_list);
        c.horizon = j.value("horizon", c.horizon);
        c.grid_points = j.value("grid_points", c.grid_points);
        c.replications = j.value("replications", c.replications);
        c.seed = j.value("seed", c.seed);
        c.initial = InitialCondition::parse(j.value("initial", std::string("empty")));
        c.output_dir = j.value("output_dir", c.output_dir);
        c.suites = j.value("suites", c.suites);
        c.workers = j.value("workers", c.workers);
        c.burn_in_fraction = j.value("burn_in_fraction", c.burn_in_fraction);
        c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
        c.k_max = j.value("k_max", c.k_max);
        c.rate_tolerance = j.value("rate_tolerance", c.rate_tolerance);
        c.fluid_horizon = j.value("fluid_horizon", c.fluid_horizon);
        c.fluid_step = j.value("fluid_step", c.fluid_step);
        c.fluid_shifts = j.value("fluid_shifts", c.fluid_shifts);
        c.fluid_grid_points = j.value("fluid_grid_points", c.fluid_grid_points);
        c.max_events = j.value("max_events", c.max_events);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string ExperimentConfig::serialize() const { return to_json().dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return from_json(j);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace psq
