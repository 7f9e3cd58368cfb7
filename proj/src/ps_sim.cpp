#include "psq/ps_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace psq {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LaterThreshold {
    bool operator()(const Job& a, const Job& b) const { return a.threshold > b.threshold; }
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------- EventLog

double EventLog::s_at(double t) const {
    auto it = std::upper_bound(events.begin(), events.end(), t,
                               [](double v, const EventRecord& e) { return v < e.time; });
    if (it == events.begin()) return 0.0;
    const EventRecord& e = *std::prev(it);
    return e.z > 0 ? e.s + (t - e.time) / e.z : e.s;
}

std::size_t EventLog::arrivals_by(double t) const {
    auto it = std::upper_bound(arrivals.begin(), arrivals.end(), t,
                               [](double v, const ArrivalRecord& a) { return v < a.time; });
    return static_cast<std::size_t>(it - arrivals.begin());
}

// -------------------------------------------------------------- QueueState

QueueState QueueState::init(std::span<const double> initial) {
    QueueState st;
    st.jobs_.reserve(initial.size());
    for (double v : initial) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("init: service requirements must be positive");
        st.jobs_.push_back({v, st.next_id_++});
    }
    std::make_heap(st.jobs_.begin(), st.jobs_.end(), LaterThreshold{});
    return st;
}

double QueueState::workload() const {
    double w = 0.0;
    for (const auto& j : jobs_) w += j.threshold - s_;
    return w;
}

std::vector<double> QueueState::residuals() const {
    std::vector<double> r;
    r.reserve(jobs_.size());
    for (const auto& j : jobs_) r.push_back(j.threshold - s_);
    return r;
}

void QueueState::schedule_arrival(double time, double service) {
    if (pending_) throw std::logic_error("schedule_arrival: an arrival is already pending");
    if (!(time >= time_)) throw std::domain_error("schedule_arrival: arrival in the past");
    if (!(service > 0.0)) throw std::domain_error("schedule_arrival: service must be positive");
    pending_ = Arrival{time, service};
}

double QueueState::next_departure_time() const {
    if (jobs_.empty()) return kInf;
    return time_ + static_cast<double>(jobs_.size()) * (jobs_.front().threshold - s_);
}

double QueueState::next_event_time() const {
    const double dep = next_departure_time();
    return pending_ ? std::min(dep, pending_->time) : dep;
}

void QueueState::depart() {
    const double level = jobs_.front().threshold;
    time_ += static_cast<double>(jobs_.size()) * (level - s_);
    s_ = level;
    // every job at the minimal threshold leaves together
    while (!jobs_.empty() && jobs_.front().threshold <= level) {
        std::pop_heap(jobs_.begin(), jobs_.end(), LaterThreshold{});
        jobs_.pop_back();
    }
    record(EventKind::departure);
}

EventKind QueueState::advance() {
    const double dep = next_departure_time();
    if (pending_ && pending_->time < dep) {
        const Arrival a = *pending_;
        if (!jobs_.empty()) {
            const double s_new = s_ + (a.time - time_) / static_cast<double>(jobs_.size());
            if (s_new >= jobs_.front().threshold) {
                depart();  // rounding put the departure first
                return EventKind::departure;
            }
            s_ = s_new;
        }
        time_ = a.time;
        double threshold = a.service + s_;
        if (!(threshold > s_)) threshold = std::nextafter(s_, kInf);
        jobs_.push_back({threshold, next_id_++});
        std::push_heap(jobs_.begin(), jobs_.end(), LaterThreshold{});
        pending_.reset();
        if (log_) log_->arrivals.push_back({time_, a.service, s_});
        record(EventKind::arrival);
        return EventKind::arrival;
    }
    if (jobs_.empty()) return EventKind::none;
    depart();
    return EventKind::departure;
}

void QueueState::idle_to(double t) {
    if (t < time_) throw std::domain_error("idle_to: time runs forward only");
    if (!jobs_.empty()) {
        double s_new = s_ + (t - time_) / static_cast<double>(jobs_.size());
        const double level = jobs_.front().threshold;
        if (s_new >= level) s_new = std::nextafter(level, -kInf);
        s_ = std::max(s_, s_new);
    }
    time_ = t;
}

void QueueState::enable_log() {
    if (log_) return;
    log_ = std::make_shared<EventLog>();
    record(EventKind::none);
}

void QueueState::record(EventKind kind) {
    if (!log_) return;
    log_->events.push_back({time_, s_, static_cast<std::uint32_t>(jobs_.size()), kind});
}

FiniteMeasure state_measure(const QueueState& state) {
    const auto r = state.residuals();
    return FiniteMeasure::unit_atoms(r);
}

// ----------------------------------------------------------------- sources

RenewalArrivals::RenewalArrivals(Distribution interarrival, Distribution service, Stream arrivals, Stream services)
    : interarrival_(std::move(interarrival)),
      service_(std::move(service)),
      arrivals_(arrivals),
      services_(services) {}

std::optional<Arrival> RenewalArrivals::next() {
    clock_ += interarrival_.sample(arrivals_);
    return Arrival{clock_, service_.sample(services_)};
}

std::optional<Arrival> ScriptedArrivals::next() {
    if (pos_ >= arrivals_.size()) return std::nullopt;
    return arrivals_[pos_++];
}

// ------------------------------------------------------- initial condition

InitialCondition InitialCondition::parse(const std::string& text) {
    InitialCondition ic;
    auto args = [&](const std::string& head) {
        if (text.size() < head.size() + 2 || text.compare(0, head.size() + 1, head + "(") != 0 || text.back() != ')')
            throw std::invalid_argument("initial condition: malformed '" + text + "'");
        std::vector<double> out;
        std::stringstream ss(text.substr(head.size() + 1, text.size() - head.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            out.push_back(v);
        }
        return out;
    };
    if (text == "empty") return ic;
    if (text.rfind("atoms", 0) == 0) {
        ic.kind = Kind::atoms;
        ic.atoms = args("atoms");
        for (double v : ic.atoms)
            if (!(v > 0)) throw std::invalid_argument("initial condition: atoms must be positive");
        return ic;
    }
    if (text.rfind("manifold", 0) == 0) {
        const auto a = args("manifold");
        if (a.size() != 1 || !(a[0] >= 0)) throw std::invalid_argument("initial condition: manifold(w) needs w >= 0");
        ic.kind = Kind::manifold;
        ic.workload = a[0];
        return ic;
    }
    throw std::invalid_argument("initial condition: unknown form '" + text + "'");
}

std::string InitialCondition::to_string() const {
    switch (kind) {
        case Kind::empty:
            return "empty";
        case Kind::atoms: {
            std::string s = "atoms(";
            for (std::size_t i = 0; i < atoms.size(); ++i) s += (i ? "," : "") + fmt(atoms[i]);
            return s + ")";
        }
        case Kind::manifold:
            return "manifold(" + fmt(workload) + ")";
    }
    return "empty";
}

std::vector<double> InitialCondition::draw(const Distribution& service, double r, Stream& rng) const {
    switch (kind) {
        case Kind::empty:
            return {};
        case Kind::atoms:
            return atoms;
        case Kind::manifold: {
            const auto n = static_cast<std::size_t>(std::ceil(workload * r / service.excess_mean()));
            std::vector<double> v(n);
            for (auto& x : v) x = service.sample_excess(rng);
            return v;
        }
    }
    return {};
}

// -------------------------------------------------------------------- path

nlohmann::json RunMeta::to_json() const {
    return {{"seed", seed}, {"replication", replication}, {"r", r}, {"lambda", lambda}, {"view", view}};
}

FiniteMeasure SimPath::measure(std::size_t i) const {
    return FiniteMeasure::unit_atoms(samples.at(i).residuals, weight);
}

std::size_t SimPath::index_at(double t) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const Snapshot& s, double v) { return s.t < v; });
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    for (auto cand : {it, it == samples.begin() ? it : std::prev(it)}) {
        if (cand != samples.end() && std::abs(cand->t - t) <= tol) return static_cast<std::size_t>(cand - samples.begin());
    }
    throw std::domain_error("SimPath: no sample at t = " + fmt(t));
}

SimPath simulate(std::span<const double> initial, ArrivalSource& arrivals, const SimOptions& opt) {
    if (!(opt.horizon > 0.0)) throw std::domain_error("simulate: horizon must be positive");
    for (std::size_t i = 0; i < opt.grid.size(); ++i) {
        if (opt.grid[i] < 0.0 || opt.grid[i] > opt.horizon) throw std::domain_error("simulate: grid outside [0, horizon]");
        if (i > 0 && !(opt.grid[i] > opt.grid[i - 1])) throw std::domain_error("simulate: grid must increase strictly");
    }
    QueueState st = QueueState::init(initial);
    if (opt.keep_log) st.enable_log();
    auto schedule_next = [&] {
        if (auto a = arrivals.next(); a && a->time <= opt.horizon) st.schedule_arrival(a->time, a->service);
    };
    schedule_next();

    SimPath path;
    path.samples.reserve(opt.grid.size());
    std::size_t events = 0;
    for (double g : opt.grid) {
        while (st.next_event_time() <= g) {
            if (st.advance() == EventKind::arrival) schedule_next();
            if (++events > opt.max_events) {
                std::ostringstream os;
                os << "simulate: event cap " << opt.max_events << " exceeded at t = " << st.time()
                   << " with queue length " << st.queue_length();
                throw SimulationAborted(os.str());
            }
        }
        st.idle_to(g);
        path.samples.push_back({g, static_cast<double>(st.queue_length()), st.workload(), st.cumulative_service(),
                                st.residuals()});
    }
    path.log = st.shared_log();
    return path;
}

SimPath run(const HeavyTrafficFamily& fam, double r, const SimOptions& opt, const InitialCondition& ic,
            std::uint64_t seed, std::uint64_t replication) {
    const SystemLaws laws = instantiate_r(fam, r);
    Stream init_rng = Stream::keyed(seed, r, replication, StreamRole::initial);
    const auto initial = ic.draw(laws.service, r, init_rng);
    RenewalArrivals src(laws.interarrival, laws.service, Stream::keyed(seed, r, replication, StreamRole::arrivals),
                        Stream::keyed(seed, r, replication, StreamRole::services));
    SimPath p = simulate(initial, src, opt);
    p.meta = {seed, replication, r, fam.lambda, "raw"};
    return p;
}

SimPath scaled_view(const SimPath& path, double r, ScaleMode mode, std::optional<double> horizon) {
    if (!(r > 0.0)) throw std::domain_error("scaled_view: r must be positive");
    if (path.meta.view != "raw") throw std::invalid_argument("scaled_view: path is already scaled");
    SimPath out;
    out.weight = path.weight / r;
    out.meta = path.meta;
    out.log = path.log;
    const double time_scale = mode.kind == ScaleMode::Kind::diffusion ? r * r : r;
    const double offset = mode.kind == ScaleMode::Kind::shifted ? mode.shift : 0.0;
    out.meta.view = mode.kind == ScaleMode::Kind::fluid       ? "fluid"
                    : mode.kind == ScaleMode::Kind::diffusion ? "diffusion"
                                                              : "shifted(" + fmt(mode.shift) + ")";
    for (const auto& s : path.samples) {
        const double t = s.t / time_scale - offset;
        if (t < -1e-12 * std::max(1.0, offset)) continue;
        out.samples.push_back({std::max(t, 0.0), s.z / r, s.w / r, s.s, s.residuals});
    }
    if (horizon) {
        const double have = out.samples.empty() ? -kInf : out.samples.back().t;
        if (have < *horizon * (1.0 - 1e-12)) throw std::domain_error("scaled_view: path does not cover the horizon");
    }
    return out;
}

double replay_check(const SimPath& path, double t, double h, const TestFunction& g) {
    if (!path.log) throw UnsupportedOperation("replay_check: run without an event log");
    if (path.meta.view != "raw") throw std::invalid_argument("replay_check: needs the unscaled path");
    if (!(h >= 0.0)) throw std::domain_error("replay_check: h must be >= 0");
    const Snapshot& a = path.samples[path.index_at(t)];
    const Snapshot& b = path.samples[path.index_at(t + h)];
    const EventLog& log = *path.log;
    const double s_end = log.s_at(b.t);
    const double s_span = s_end - log.s_at(a.t);

    double now = 0.0;
    for (double x : b.residuals) now += path.weight * g(x);
    double transported = 0.0;
    for (double x : a.residuals)
        if (x - s_span > 0.0) transported += path.weight * g(x - s_span);
    double influx = 0.0;
    auto first = std::upper_bound(log.arrivals.begin(), log.arrivals.end(), a.t,
                                  [](double v, const ArrivalRecord& r) { return v < r.time; });
    for (auto it = first; it != log.arrivals.end() && it->time <= b.t; ++it) {
        const double x = it->service - (s_end - it->s_at_arrival);
        if (x > 0.0) influx += path.weight * g(x);
    }
    return std::abs(now - transported - influx);
}

void write_csv(const SimPath& path, std::ostream& series, std::ostream& atoms) {
    series << "t,Z,W,S\n";
    atoms << "t,location,weight\n";
    for (const auto& s : path.samples) {
        series << fmt(s.t) << ',' << fmt(s.z) << ',' << fmt(s.w) << ',' << fmt(s.s) << '\n';
        auto sorted = s.residuals;
        std::sort(sorted.begin(), sorted.end());
        for (double x : sorted) atoms << fmt(s.t) << ',' << fmt(x) << ',' << fmt(path.weight) << '\n';
    }
}

namespace {

constexpr char kMagic[8] = {'P', 'S', 'Q', 'P', 'A', 'T', 'H', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("read_binary: truncated input");
    return v;
}

}  // namespace

void write_binary(const SimPath& path, std::ostream& out) {
    out.write(kMagic, sizeof kMagic);
    const std::string meta = path.meta.to_json().dump();
    put<std::uint64_t>(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put(out, path.weight);
    put<std::uint64_t>(out, path.samples.size());
    for (const auto& s : path.samples) {
        put(out, s.t);
        put(out, s.z);
        put(out, s.w);
        put(out, s.s);
        put<std::uint64_t>(out, s.residuals.size());
        out.write(reinterpret_cast<const char*>(s.residuals.data()),
                  static_cast<std::streamsize>(s.residuals.size() * sizeof(double)));
    }
}

SimPath read_binary(std::istream& in) {
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("read_binary: not a path file");
    SimPath p;
    std::string meta(get<std::uint64_t>(in), '\0');
    if (!in.read(meta.data(), static_cast<std::streamsize>(meta.size()))) throw std::runtime_error("read_binary: truncated input");
    const auto j = nlohmann::json::parse(meta);
    p.meta = {j.at("seed").get<std::uint64_t>(), j.at("replication").get<std::uint64_t>(), j.at("r").get<double>(),
              j.at("lambda").get<double>(), j.at("view").get<std::string>()};
    p.weight = get<double>(in);
    const auto n = get<std::uint64_t>(in);
    p.samples.resize(n);
    for (auto& s : p.samples) {
        s.t = get<double>(in);
        s.z = get<double>(in);
        s.w = get<double>(in);
        s.s = get<double>(in);
        s.residuals.resize(get<std::uint64_t>(in));
        if (!in.read(reinterpret_cast<char*>(s.residuals.data()),
                     static_cast<std::streamsize>(s.residuals.size() * sizeof(double))))
            throw std::runtime_error("read_binary: truncated input");
    }
    return p;
}

}  // namespace psq
