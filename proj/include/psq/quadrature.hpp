#pragma once

#include <functional>
#include <span>

namespace psq {

/// Adaptive Simpson quadrature of f over [a, b] with relative tolerance
/// rel_tol (an absolute floor abs_tol guards integrals close to zero).
/// The interval is first cut at `breaks` that fall strictly inside it.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, double abs_tol = 1e-15,
                        std::span<const double> breaks = {});

}  // namespace psq
