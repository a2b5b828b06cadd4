#include "nested_lsmc/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nested_lsmc/errors.hpp"

namespace nlsmc {
namespace {

constexpr double kRange = 10.0;
constexpr int kOrder = 8;

struct GaussLegendre {
  std::array<double, kOrder> nodes{};
  std::array<double, kOrder> weights{};
};

// Nodes by Newton iteration on P_n from the Chebyshev initial guess.
GaussLegendre make_rule() {
  GaussLegendre rule;
  for (int i = 0; i < kOrder; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (kOrder + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= kOrder; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const GaussLegendre& rule() {
  static const GaussLegendre r = make_rule();
  return r;
}

double density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_expectation(const std::function<double(double)>& g, int panels,
                          std::span<const double> breakpoints) {
  if (panels < 1) throw DomainError("normal_expectation: panels must be >= 1");
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(panels) + 1 + breakpoints.size());
  for (int p = 0; p <= panels; ++p) cuts.push_back(-kRange + 2.0 * kRange * p / panels);
  for (double b : breakpoints)
    if (b > -kRange && b < kRange) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  const auto& gl = rule();
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double piece = 0.0;
    for (int i = 0; i < kOrder; ++i) {
      const double x = mid + half * gl.nodes[i];
      piece += gl.weights[i] * g(x) * density(x);
    }
    total += half * piece;
  }
  return total;
}

double normal_expectation_checked(const std::function<double(double)>& g, int panels,
                                  std::span<const double> breakpoints, double rel_tol, double abs_floor) {
  const double coarse = normal_expectation(g, panels, breakpoints);
  const double fine = normal_expectation(g, 2 * panels, breakpoints);
  if (std::abs(fine - coarse) > rel_tol * std::max(std::abs(fine), abs_floor)) {
    throw QuadratureNotConverged("quadrature changed by " + std::to_string(std::abs(fine - coarse)) +
                                 " when doubling " + std::to_string(panels) + " panels");
  }
  return fine;
}

}  // namespace nlsmc
