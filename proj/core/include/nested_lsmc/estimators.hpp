#pragma once

#include <cstdint>
#include <utility>

#include "nested_lsmc/basis.hpp"
#include "nested_lsmc/linalg.hpp"
#include "nested_lsmc/regress.hpp"

namespace nlsmc {

/// Γ̂ = (1/N) Σ (φ(θ,X_i) − inner_mean_i)² ∇φ∇φᵀ, with θ the fit on these samples.
SymMatrix gamma_hat(const NestedSamples& samples, const ParamFamily& family, const Vector& theta);

struct VarianceEstimates {
  SymMatrix gamma_hat_2k;  // Γ̂_N^{2K̄}
  SymMatrix a_anti;        // may be indefinite
  SymMatrix b_anti;        // PSD
  int kbar = 1;
  int n_used = 0;
};

/// Antithetic split of 2K̄ inner draws into halves k ≤ K̄ and k > K̄, all
/// residuals taken at the same θ^{2K̄}. a_anti + b_anti/(2K̄) = Γ̂^{2K̄}.
/// Throws WrongInnerCount unless each sample carries an even number of inner values.
VarianceEstimates ab_antithetic(const NestedSamples& samples, const ParamFamily& family, const Vector& theta_2k);

/// Difference estimators from two Γ̂ at K1 < K2:
/// A = (K2Γ̂₂ − K1Γ̂₁)/(K2−K1), B = K1K2(Γ̂₁ − Γ̂₂)/(K2−K1).
std::pair<SymMatrix, SymMatrix> ab_difference(const SymMatrix& gamma_k1, int k1, const SymMatrix& gamma_k2, int k2);

struct KEstimates {
  std::uint64_t k_a_h = 1;
  std::uint64_t k_a_noh = 1;
  std::uint64_t k_g_h = 1;
  std::uint64_t k_g_noh = 1;
  // Arguments of ν before saturation; +inf marks a zero denominator.
  double ratio_a_h = 0.0;
  double ratio_a_noh = 0.0;
  double ratio_g_h = 0.0;
  double ratio_g_noh = 0.0;
};

inline constexpr std::uint64_t kDefaultKCap = 10000;

/// The four K★ estimators. A-based denominators use the positive part of the
/// whitened Â (|Â| when q = 1); Γ-based ones use Γ̂^{2K̄}. Results saturate at k_cap.
KEstimates k_estimators(const VarianceEstimates& ve, const SymMatrix& h, double cost_ratio,
                        std::uint64_t k_cap = kDefaultKCap);

}  // namespace nlsmc
