#pragma once

#include <array>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psq/config.hpp"
#include "psq/measure.hpp"
#include "psq/ps_sim.hpp"
#include "psq/stats.hpp"

namespace psq {

/// Runs fn(0..n-1) on `workers` threads; each index runs exactly once.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// ------------------------------------------------------------- collapse

struct ReplicationResult {
    double r = 0.0;
    int replication = 0;
    bool ok = false;
    double sup_metric = 0.0;
    double argmax_t = 0.0;
    std::string error;
};

struct CollapseRow {
    double r;
    int attempted;
    int succeeded;
    ConfidenceInterval ci;
};

struct CollapseReport {
    std::vector<ReplicationResult> replications;
    std::vector<CollapseRow> per_r;
    bool enough_success = false;   // >= 80% of replications per r
    bool means_decreasing = false; // mean strictly decreasing along r_list
    bool ci_separated = false;     // CI(largest r) entirely below CI(smallest r)

    bool passed() const { return enough_success && ci_separated; }
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

/// Diffusion-time grid on [burn_in, T].
std::vector<double> collapse_grid(const ExperimentConfig& cfg);
/// Diffusion-scaled path of one replication sampled on collapse_grid.
SimPath collapse_path(const ExperimentConfig& cfg, double r, int replication);

/// max over samples of d[mu_hat(t), Delta_nu W_hat(t)] for a diffusion-scaled path.
struct SupMetric {
    double value;
    double argmax_t;
};
SupMetric collapse_sup_metric(const SimPath& diffusion_path, const std::shared_ptr<const Distribution>& nu,
                              const TestFunctionFamily& fam);

CollapseReport run_collapse_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------- steady state

struct GofEntry {
    std::string name;
    double r;
    std::string reference;
    KsResult ks;
};

struct SteadyRow {
    double r;
    int succeeded;
    double fitted_rate;
    double limit_rate;
    double rate_error;  // relative
    bool rate_ok;
};

struct GofReport {
    std::vector<GofEntry> tests;
    std::vector<SteadyRow> rates;
    // per r, per replication (r, replication, Z_hat, W_hat)
    std::vector<std::array<double, 4>> samples;

    bool passed() const;
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

/// lambda (beta^-2 + b^2) / (a^2 + b^2), the exponential rate of the queue-length limit.
double limit_queue_rate(const HeavyTrafficFamily& fam);

GofReport run_steady_state_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------- fluid comparison

struct FluidComparisonRow {
    double r;
    double m;
    bool ok;
    double path_distance;  // max_t d[mu_bar^{r,m}(t), zeta(t)]
    double manifold_start; // d[mu_bar^{r,m}(0), Delta_nu W_bar^{r,m}(0)]
    double manifold_end;   // max over t in [L-1, L] of the same distance
    std::string error;
};

struct FluidComparisonReport {
    std::vector<FluidComparisonRow> rows;
    std::vector<std::pair<double, double>> median_distance;  // (r, median path distance)
    bool distance_decreasing = false;
    bool attraction = false;  // median end distance <= median start distance + tolerance

    bool passed() const { return distance_decreasing && attraction; }
    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

/// Compare the shifted fluid view of `fluid_path` (already in fluid scale)
/// starting at m with the fluid model solution started from its state at m.
FluidComparisonRow compare_with_fluid(const SimPath& fluid_path, double m, double alpha,
                                      const std::shared_ptr<const Distribution>& nu, double L, double step,
                                      int grid_points, const TestFunctionFamily& fam);

FluidComparisonReport run_fluid_comparison(const ExperimentConfig& cfg);

// --------------------------------------------------------------- output

/// Writes <suite>.csv files and summary.json into cfg.output_dir.
void write_reports(const ExperimentConfig& cfg, const CollapseReport* collapse, const GofReport* steady,
                   const FluidComparisonReport* fluid);

}  // namespace psq
