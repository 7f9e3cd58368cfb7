#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include "psq/distributions.hpp"
#include "psq/measure.hpp"

namespace psq {

/// Mass of the fluid solution fell below the numerical floor.
class FluidSingularity : public std::runtime_error {
public:
    FluidSingularity(const std::string& what, double time) : std::runtime_error(what), time(time) {}
    double time;
};

/// Numerical fluid model solution on a uniform grid. The measure at time t is
/// the initial measure transported by S(t) plus the arrival influx
/// alpha * int_0^t (nu shifted left by S(t) - S(s)) ds.
struct FluidPath {
    std::vector<double> t;
    std::vector<double> s;
    std::vector<double> z;
    FiniteMeasure initial;
    double alpha = 0.0;
    std::shared_ptr<const Distribution> nu;
    double step = 0.0;

    double horizon() const { return t.empty() ? 0.0 : t.back(); }
    bool is_zero() const { return initial.is_zero(); }
    /// Linear interpolation of S.
    double s_at(double time) const;
};

inline constexpr double kFluidMassFloor = 1e-12;

/// Heun predictor-corrector for S' = 1/Z with
/// Z(t) = xi((S(t), inf)) + alpha int_0^t tail_nu(S(t) - S(s)) ds (trapezoid memory).
FluidPath fluid_solve(const FiniteMeasure& xi, double alpha, std::shared_ptr<const Distribution> nu, double horizon,
                      double step);

FiniteMeasure fluid_measure_at(const FluidPath& path, double t);

/// <chi, zeta(t_k)> on every grid point.
std::vector<double> fluid_workloads(const FluidPath& path);

/// Delta_nu <chi, xi>.
FiniteMeasure fluid_steady_state(const FiniteMeasure& xi, std::shared_ptr<const Distribution> nu);

/// |<g, zeta(t)> - <g, xi> + int_0^t <g', zeta(s)> / <1, zeta(s)> ds - alpha t <g, nu>|
/// with the time integral taken by the trapezoid rule on the grid.
double residual_4_2(const FluidPath& path, const TestFunction& g, double t);

/// CSV with columns t,S,Z,workload.
void write_csv(const FluidPath& path, std::ostream& out);

}  // namespace psq
