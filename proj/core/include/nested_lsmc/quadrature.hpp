#pragma once

#include <functional>
#include <span>

namespace nlsmc {

/// Composite Gauss-Legendre estimate of E[g(Z)], Z ~ N(0,1), over the
/// truncated range [-10, 10]. The range is cut into `panels` equal panels and
/// further split at every point of `breakpoints` that falls inside it, so
/// integrands that are smooth between breakpoints integrate to near machine
/// precision. Each piece uses an 8-point rule.
double normal_expectation(const std::function<double(double)>& g, int panels,
                          std::span<const double> breakpoints = {});

/// Same as normal_expectation, then repeats with twice the panels and throws
/// QuadratureNotConverged when the two results differ by more than
/// rel_tol·max(|value|, abs_floor).
double normal_expectation_checked(const std::function<double(double)>& g, int panels,
                                  std::span<const double> breakpoints = {}, double rel_tol = 1e-6,
                                  double abs_floor = 1e-12);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace nlsmc
