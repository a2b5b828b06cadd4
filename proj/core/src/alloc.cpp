#include "nested_lsmc/alloc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nested_lsmc/errors.hpp"

namespace nlsmc {

std::uint64_t nu(double x) {
  if (std::isnan(x) || x < 0.0) throw DomainError("nu: argument must be non-negative");
  if (x > 1e30) throw DomainError("nu: argument too large");
  if (x == 0.0) return 1;
  // Smallest ν with ν(ν+1) ≥ x, then correct any rounding of the square root.
  double v = std::ceil(0.5 * (std::sqrt(1.0 + 4.0 * x) - 1.0));
  if (v < 1.0) v = 1.0;
  while (v > 1.0 && (v - 1.0) * v >= x) v -= 1.0;
  while (v * (v + 1.0) < x) v += 1.0;
  return static_cast<std::uint64_t>(v);
}

double optimal_gain(double xi, double cost_ratio) {
  const double c = cost_ratio;
  const double v = static_cast<double>(nu(xi));
  return (1.0 + v * c) * (1.0 + xi / v * c) / ((1.0 + c) * (1.0 + xi * c));
}

std::uint64_t floor_budget(double budget, double cost_ratio, std::uint64_t k) {
  const double n = budget / (1.0 + static_cast<double>(k) * cost_ratio);
  // A quotient a few ulps below an integer is taken as that integer.
  const double up = std::round(n);
  if (up > n && up - n <= 8.0 * std::numeric_limits<double>::epsilon() * up) return static_cast<std::uint64_t>(up);
  return static_cast<std::uint64_t>(std::floor(n));
}

AllocationResult optimal_k_n(const AllocationInputs& inp) {
  if (!(inp.cost_ratio > 0.0)) throw DomainError("optimal_k_n: cost_ratio must be positive");
  if (!(inp.budget > 0.0)) throw DomainError("optimal_k_n: budget must be positive");
  if (inp.tr_b < 0.0) throw DomainError("optimal_k_n: tr_b must be non-negative");
  if (!(inp.tr_a > 0.0)) throw ZeroA("optimal_k_n: tr_a is zero; the family contains the conditional expectation");
  AllocationResult r;
  r.xi = inp.tr_b / (inp.cost_ratio * inp.tr_a);
  r.k_star = nu(r.xi);
  r.n_star = floor_budget(inp.budget, inp.cost_ratio, r.k_star);
  if (r.n_star < 1) throw BudgetTooSmall("optimal_k_n: budget leaves no outer sample");
  r.r_star = optimal_gain(r.xi, inp.cost_ratio);
  return r;
}

double gain_rk(double tr_a, double tr_b, double cost_ratio, std::uint64_t k) {
  if (!(tr_a + tr_b > 0.0)) throw DomainError("gain_rk: tr_a + tr_b must be positive");
  if (k < 1) throw DomainError("gain_rk: k must be >= 1");
  if (k == 1) return 1.0;
  const double kd = static_cast<double>(k);
  return (tr_a + tr_b / kd) / (tr_a + tr_b) * (1.0 + kd * cost_ratio) / (1.0 + cost_ratio);
}

DiscreteAllocation lemma_optim(double a, double b, double cbar, double c) {
  if (!(a > 0.0 && b > 0.0 && cbar > 0.0 && c > 0.0)) throw DomainError("lemma_optim: inputs must be positive");
  DiscreteAllocation r;
  r.y_star = nu(b / (a * cbar));
  r.x_star = floor_budget(c, cbar, r.y_star);
  if (r.x_star < 1) throw BudgetTooSmall("lemma_optim: budget " + std::to_string(c) + " too small");
  return r;
}

}  // namespace nlsmc
