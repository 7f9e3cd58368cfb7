#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "psq/distributions.hpp"
#include "psq/ps_sim.hpp"

namespace psq {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    HeavyTrafficFamily family{Distribution::exponential(1.0), Distribution::exponential(1.0), 0.0, 0.5};
    std::vector<double> r_list{10.0, 20.0, 40.0};
    double horizon = 2.0;  // diffusion time T
    int grid_points = 200;
    int replications = 50;
    std::uint64_t seed = 1;
    InitialCondition initial;
    std::string output_dir = "out";
    std::vector<std::string> suites{"collapse"};
    int workers = 1;
    double burn_in_fraction = 0.05;
    int bootstrap_resamples = 2000;
    int k_max = 64;
    double rate_tolerance = 0.10;  // steady suite: fitted exponential rate
    double fluid_horizon = 5.0;    // L
    double fluid_step = 0.05;
    int fluid_shifts = 10;
    int fluid_grid_points = 21;
    std::uint64_t max_events = 2'000'000'000;

    /// Throws ConfigError on any violated constraint.
    void validate() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    /// Canonical text form; parse(serialize(c)) serializes to the same bytes.
    std::string serialize() const;
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::string& path);
};

}  // namespace psq
