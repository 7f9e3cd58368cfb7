#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "psq/distributions.hpp"
#include "psq/measure.hpp"
#include "psq/rng.hpp"

namespace psq {

class UnsupportedOperation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class SimulationAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A job in cumulative-service coordinates: it leaves when S reaches `threshold`.
struct Job {
    double threshold;
    std::uint64_t id;
};

struct Arrival {
    double time;
    double service;
};

enum class EventKind { none, arrival, departure };

struct EventRecord {
    double time;
    double s;             // cumulative service per job just after the event
    std::uint32_t z;      // queue length just after the event
    EventKind kind;
};

struct ArrivalRecord {
    double time;
    double service;
    double s_at_arrival;
};

/// Full record of a run, needed to replay the dynamic equation.
struct EventLog {
    std::vector<EventRecord> events;  // events[0] is the initial state at t = 0
    std::vector<ArrivalRecord> arrivals;

    /// Piecewise-linear cumulative service S(t).
    double s_at(double t) const;
    /// E(t): number of exogenous arrivals in (0, t].
    std::size_t arrivals_by(double t) const;
};

/// Exact processor-sharing queue state. Each of the Z jobs receives service
/// at rate 1/Z; S(t) is the cumulative service delivered to every job.
class QueueState {
public:
    /// Initial jobs with the given service requirements; S(0) = 0.
    static QueueState init(std::span<const double> initial);

    double time() const { return time_; }
    double cumulative_service() const { return s_; }
    std::size_t queue_length() const { return jobs_.size(); }
    double workload() const;
    std::vector<double> residuals() const;
    std::span<const Job> jobs() const { return jobs_; }

    void schedule_arrival(double time, double service);
    std::optional<Arrival> pending_arrival() const { return pending_; }

    /// Time of the next departure (+inf when empty).
    double next_departure_time() const;
    /// Time of the next event of either kind (+inf when none).
    double next_event_time() const;

    /// Process exactly one event (departures win ties with arrivals).
    EventKind advance();
    /// Let time run to t with no event in between (t < next_event_time()).
    void idle_to(double t);

    void enable_log();
    const EventLog* log() const { return log_.get(); }
    std::shared_ptr<const EventLog> shared_log() const { return log_; }

private:
    void depart();
    void record(EventKind kind);

    double time_ = 0.0;
    double s_ = 0.0;
    std::vector<Job> jobs_;  // min-heap on threshold
    std::optional<Arrival> pending_;
    std::uint64_t next_id_ = 0;
    std::shared_ptr<EventLog> log_;
};

/// state_measure: one unit atom at each live job's residual.
FiniteMeasure state_measure(const QueueState& state);

/// Source of exogenous arrivals in time order.
class ArrivalSource {
public:
    virtual ~ArrivalSource() = default;
    virtual std::optional<Arrival> next() = 0;
};

/// Delayed renewal arrivals: u_1, u_2, ... i.i.d. from the interarrival law,
/// service requirements i.i.d. from the service law, on separate streams.
class RenewalArrivals : public ArrivalSource {
public:
    RenewalArrivals(Distribution interarrival, Distribution service, Stream arrivals, Stream services);
    std::optional<Arrival> next() override;

private:
    Distribution interarrival_;
    Distribution service_;
    Stream arrivals_;
    Stream services_;
    double clock_ = 0.0;
};

class ScriptedArrivals : public ArrivalSource {
public:
    explicit ScriptedArrivals(std::vector<Arrival> arrivals) : arrivals_(std::move(arrivals)) {}
    std::optional<Arrival> next() override;

private:
    std::vector<Arrival> arrivals_;
    std::size_t pos_ = 0;
};

/// Initial condition: "empty", "atoms(x1,x2,...)" or "manifold(w)".
struct InitialCondition {
    enum class Kind { empty, atoms, manifold };
    Kind kind = Kind::empty;
    std::vector<double> atoms;
    double workload = 0.0;

    static InitialCondition parse(const std::string& text);
    std::string to_string() const;
    /// Service requirements of the initial jobs of the r-th system.
    std::vector<double> draw(const Distribution& service, double r, Stream& rng) const;
};

struct Snapshot {
    double t;
    double z;  // queue length (scaled in scaled views)
    double w;  // workload (scaled in scaled views)
    double s;  // cumulative service per job
    std::vector<double> residuals;
};

struct RunMeta {
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    double r = 1.0;
    double lambda = 0.0;
    std::string view = "raw";
    nlohmann::json to_json() const;
};

/// Sampled trajectory. Snapshot i denotes the measure with an atom of mass
/// `weight` at every residual.
struct SimPath {
    std::vector<Snapshot> samples;
    double weight = 1.0;
    RunMeta meta;
    std::shared_ptr<const EventLog> log;

    FiniteMeasure measure(std::size_t i) const;
    /// Index of the sample at time t (relative tolerance 1e-12).
    std::size_t index_at(double t) const;
};

struct SimOptions {
    double horizon = 1.0;
    std::vector<double> grid;  // strictly increasing, within [0, horizon]
    std::size_t max_events = 2'000'000'000;
    bool keep_log = false;
};

/// Event-driven trajectory from initial jobs and an arrival source.
SimPath simulate(std::span<const double> initial, ArrivalSource& arrivals, const SimOptions& opt);

/// The r-th system of a heavy-traffic family, streams keyed by (seed, r, replication).
SimPath run(const HeavyTrafficFamily& fam, double r, const SimOptions& opt, const InitialCondition& ic,
            std::uint64_t seed, std::uint64_t replication);

struct ScaleMode {
    enum class Kind { fluid, diffusion, shifted };
    Kind kind = Kind::fluid;
    double shift = 0.0;  // m, shifted mode only

    static ScaleMode fluid() { return {Kind::fluid, 0.0}; }
    static ScaleMode diffusion() { return {Kind::diffusion, 0.0}; }
    static ScaleMode shifted(double m) { return {Kind::shifted, m}; }
};

/// Fluid (1/r) mu(r t), diffusion (1/r) mu(r^2 t) or shifted fluid views.
/// With `horizon`, throws when the path does not reach it on the new clock.
SimPath scaled_view(const SimPath& path, double r, ScaleMode mode, std::optional<double> horizon = std::nullopt);

/// Residual of the dynamic equation between the raw snapshots at t and t + h.
double replay_check(const SimPath& path, double t, double h, const TestFunction& g);

void write_csv(const SimPath& path, std::ostream& series, std::ostream& atoms);
void write_binary(const SimPath& path, std::ostream& out);
SimPath read_binary(std::istream& in);

}  // namespace psq
