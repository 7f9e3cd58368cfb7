#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "psq/rng.hpp"

namespace psq {

/// Raised when a steady state is requested for a non-positive drift magnitude.
class NoSteadyState : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// How the Skorokhod map sees the free path between grid points.
/// grid: running minimum over grid values only (biased low by about
/// 0.58 sigma sqrt(step)). bridge: the minimum inside each step is drawn from
/// the Brownian bridge law, which makes W* exact at the grid times.
enum class Reflection { bridge, grid };

/// Reflected Brownian motion on [0, inf) with drift -lambda and variance sigma2.
struct RbmParams {
    double lambda = 0.0;
    double sigma2 = 1.0;
    double w0 = 0.0;
    Reflection reflection = Reflection::bridge;

    /// Limit workload parameters: variance alpha a^2 + beta b^2.
    static RbmParams from_limits(double lambda, double alpha, double a, double beta, double b, double w0 = 0.0);
};

struct RbmPath {
    std::vector<double> t;
    std::vector<double> w;     // reflected path W*
    std::vector<double> push;  // nondecreasing regulator max(0, max_j -X_j)
};

/// Euler grid for the free process, then the Skorokhod map on its running minimum.
RbmPath rbm_simulate(const RbmParams& params, double horizon, double step, Stream& rng);
/// Terminal value only; same draws as rbm_simulate.
double rbm_terminal(const RbmParams& params, double horizon, double step, Stream& rng);

/// 1 - exp(-2 lambda x / sigma2).
double rbm_steady_cdf(const RbmParams& params, double x);

/// 1 - exp(-lambda (beta^-2 + b^2) (a^2 + b^2)^-1 x), the queue-length limit law.
double zstar_steady_cdf(double x, double lambda, double beta, double a, double b);

/// 2 beta / (1 + beta^2 b^2).
double c_nu(double beta, double b);

/// CSV with columns t,W.
void write_csv(const RbmPath& path, std::ostream& out);

}  // namespace psq
