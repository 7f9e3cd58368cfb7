#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psq/distributions.hpp"

namespace psq {

/// Raised when a test function is not finite somewhere on the support.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Atom {
    double location;
    double weight;
};

/// Which law of a distribution a parametric part refers to.
enum class LawView { base, excess };

/// scale * (law shifted left by `shift`, restricted to (0, inf)).
struct ParametricPart {
    std::shared_ptr<const Distribution> dist;
    LawView view = LawView::base;
    double scale = 0.0;
    double shift = 0.0;

    /// Mass of this part, scale * P(Y > shift).
    double mass() const;
    /// Largest point that carries mass (effective for unbounded laws).
    double support_end() const;
};

/// Finite nonnegative measure on (0, inf): atoms plus scaled, shifted copies
/// of catalog laws. Atoms at locations <= 0 are dropped on construction.
/// Exponential parts are stored unshifted (memorylessness) and merged.
class FiniteMeasure {
public:
    FiniteMeasure() = default;

    static FiniteMeasure from_atoms(std::vector<Atom> atoms);
    static FiniteMeasure unit_atoms(std::span<const double> locations, double weight = 1.0);
    static FiniteMeasure parametric(std::shared_ptr<const Distribution> dist, LawView view, double scale,
                                    double shift = 0.0);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<ParametricPart>& parts() const { return parts_; }
    bool is_zero() const { return atoms_.empty() && parts_.empty(); }

    double total_mass() const;
    /// Right end of the support, 0 for the zero measure.
    double support_end() const;

    FiniteMeasure scaled(double c) const;
    FiniteMeasure& operator+=(const FiniteMeasure& other);
    friend FiniteMeasure operator+(FiniteMeasure a, const FiniteMeasure& b) { return a += b; }

    void add_atom(double location, double weight);
    void add_part(ParametricPart part);

private:
    std::vector<Atom> atoms_;
    std::vector<ParametricPart> parts_;
};

/// A test function on [0, inf) plus what integrate() can exploit: g == 0 on
/// [0, zero_below], g == tail_value on [const_above, inf), kinks at `knots`.
struct TestFunction {
    enum class Kind { general, one, identity };

    std::function<double(double)> f;
    std::function<double(double)> df;
    Kind kind = Kind::general;
    double zero_below = 0.0;
    double const_above = std::numeric_limits<double>::infinity();
    double tail_value = 0.0;
    std::vector<double> knots;
    std::string name;

    double operator()(double x) const { return f(x); }
    double derivative(double x) const;
    /// Same function with f replaced by its derivative.
    TestFunction derivative_function() const;

    static TestFunction one();
    static TestFunction identity();
    static TestFunction power(double p);
    static TestFunction general(std::function<double(double)> f, std::function<double(double)> df = {},
                                std::string name = "g");
    /// 1 - smoothstep(|x - center| / width), supported on [center - width, center + width].
    static TestFunction bump(double center, double width);
    /// smoothstep(x - k + 1): 0 on [0, k - 1], 1 on [k, inf).
    static TestFunction ramp(int k);
};

/// Cubic smoothstep 3u^2 - 2u^3 clamped to [0, 1].
double smoothstep(double u);
double smoothstep_derivative(double u);

/// The family {g_k} u {h_k} that defines the metric d.
class TestFunctionFamily {
public:
    explicit TestFunctionFamily(int k_max = 64);

    int k_max() const { return static_cast<int>(bumps_.size()); }
    const TestFunction& bump(int k) const { return bumps_.at(static_cast<std::size_t>(k - 1)); }
    TestFunction ramp(int k) const { return TestFunction::ramp(k); }
    /// Ramps needed so that every h_k beyond them vanishes on the support.
    static int ramp_count(double support_end);

private:
    std::vector<TestFunction> bumps_;
};

/// <g, zeta>.
double integrate(const TestFunction& g, const FiniteMeasure& zeta);
double integrate(const std::function<double(double)>& g, const FiniteMeasure& zeta);

FiniteMeasure shift_kill(const FiniteMeasure& zeta, double s);

/// (w / <chi, nu_e>) nu_e.
FiniteMeasure lift(double w, std::shared_ptr<const Distribution> nu);

/// Integrals of every family member against one measure.
struct MeasureProfile {
    std::vector<double> bump_values;
    std::vector<double> ramp_values;

    MeasureProfile scaled(double c) const;
};

MeasureProfile profile(const FiniteMeasure& zeta, const TestFunctionFamily& fam);
/// Profile of a measure whose atoms all share one weight (fast path).
MeasureProfile profile_unit_atoms(std::span<const double> locations, double weight, const TestFunctionFamily& fam);
double metric_from_profiles(const MeasureProfile& a, const MeasureProfile& b);

double metric_d(const FiniteMeasure& a, const FiniteMeasure& b, const TestFunctionFamily& fam);

struct TimedMeasure {
    double t;
    FiniteMeasure measure;
};

/// Grid approximation of sup_{t} sup_{h <= delta} d[zeta(t+h), zeta(t)].
double modulus(std::span<const TimedMeasure> path, double delta, const TestFunctionFamily& fam);

}  // namespace psq
