#pragma once

#include <cstdint>

namespace nlsmc {

/// The unique ν ≥ 1 with (ν−1)ν < x ≤ ν(ν+1); ν(0) = 1.
/// Throws DomainError for negative, NaN or astronomically large x.
std::uint64_t nu(double x);

struct AllocationInputs {
  double tr_a = 0.0;  // tr(AH⁻¹), or tr(A) for the H-free variant
  double tr_b = 0.0;
  double cost_ratio = 1.0;
  double budget = 1.0;  // in units of one outer draw
};

struct AllocationResult {
  std::uint64_t k_star = 1;
  std::uint64_t n_star = 1;
  double xi = 0.0;
  double r_star = 1.0;
};

/// K★ = ν(tr_b / (C·tr_a)), N★ = ⌊c/(1 + K★C)⌋ and the gain r★.
/// Throws ZeroA if tr_a ≤ 0 and BudgetTooSmall if N★ would be 0.
AllocationResult optimal_k_n(const AllocationInputs& inp);

/// r★ = (1+ν(ξ)C)(1+ξC/ν(ξ)) / ((1+C)(1+ξC)).
double optimal_gain(double xi, double cost_ratio);

/// r^K = (tr_a + tr_b/K)/(tr_a + tr_b) · (1+KC)/(1+C); r^1 = 1.
double gain_rk(double tr_a, double tr_b, double cost_ratio, std::uint64_t k);

struct DiscreteAllocation {
  std::uint64_t x_star = 1;
  std::uint64_t y_star = 1;
};

/// Asymptotically optimal (x, y) ∈ ℕ*² for min a/x + b/(xy) s.t. x + xy·c̄ ≤ c:
/// y★ = ν(b/(a·c̄)), x★ = ⌊c/(1 + y★c̄)⌋. Throws BudgetTooSmall if x★ < 1.
DiscreteAllocation lemma_optim(double a, double b, double cbar, double c);

/// ⌊budget/(1 + k·C)⌋, tolerant of rounding just below an integer.
std::uint64_t floor_budget(double budget, double cost_ratio, std::uint64_t k);

}  // namespace nlsmc
