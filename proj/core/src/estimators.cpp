#include "nested_lsmc/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nested_lsmc/alloc.hpp"
#include "nested_lsmc/errors.hpp"

namespace nlsmc {
namespace {

// Accumulates Σ w_i ∇φ_i∇φ_iᵀ / N, using sparse features for linear families.
class OuterProductSum {
 public:
  OuterProductSum(const ParamFamily& family, const Vector& theta)
      : family_(family), theta_(theta), acc_(Matrix::Zero(family.dim_theta(), family.dim_theta())) {}

  // Returns φ(θ, x) and caches ∇φ(θ, x) for add().
  double prepare(Point x) {
    if (family_.is_linear()) {
      static_cast<const LinearFamily&>(family_).sparse_features(x, sparse_);
      double v = 0.0;
      for (std::size_t j = 0; j < sparse_.index.size(); ++j) v += theta_(sparse_.index[j]) * sparse_.value[j];
      return v;
    }
    family_.grad(theta_, x, dense_);
    return family_.eval(theta_, x);
  }

  void add(Matrix& target, double w) const {
    if (family_.is_linear()) {
      for (std::size_t a = 0; a < sparse_.index.size(); ++a)
        for (std::size_t b = 0; b < sparse_.index.size(); ++b)
          target(sparse_.index[a], sparse_.index[b]) += w * sparse_.value[a] * sparse_.value[b];
    } else {
      target.noalias() += w * dense_ * dense_.transpose();
    }
  }

  Matrix zero() const { return Matrix::Zero(acc_.rows(), acc_.cols()); }

 private:
  const ParamFamily& family_;
  const Vector& theta_;
  Matrix acc_;
  SparseFeatures sparse_;
  Vector dense_;
};

SymMatrix finish(const Matrix& m, int n) {
  const Matrix avg = m / n;
  return SymMatrix(Matrix(0.5 * (avg + avg.transpose())));
}

struct Ratio {
  double value;
  std::uint64_t k;
};

Ratio saturating_nu(double num, double den, double cost_ratio, std::uint64_t k_cap) {
  if (num <= 0.0) return {0.0, 1};
  if (!(den > 0.0)) return {std::numeric_limits<double>::infinity(), k_cap};
  const double r = num / (cost_ratio * den);
  const double cap = static_cast<double>(k_cap);
  if (!std::isfinite(r) || r > cap * (cap + 1.0)) return {r, k_cap};
  return {r, std::min(nu(r), k_cap)};
}

}  // namespace

SymMatrix gamma_hat(const NestedSamples& samples, const ParamFamily& family, const Vector& theta) {
  if (theta.size() != family.dim_theta()) throw DimensionMismatch("gamma_hat: theta has wrong dimension");
  OuterProductSum ops(family, theta);
  Matrix acc = ops.zero();
  for (int i = 0; i < samples.size(); ++i) {
    const double r = ops.prepare(samples.x(i)) - samples.inner_mean(i);
    ops.add(acc, r * r);
  }
  return finish(acc, samples.size());
}

VarianceEstimates ab_antithetic(const NestedSamples& samples, const ParamFamily& family, const Vector& theta_2k) {
  const int k2 = samples.inner_count();
  if (k2 % 2 != 0) throw WrongInnerCount("ab_antithetic: need 2*kbar inner values, got " + std::to_string(k2));
  if (theta_2k.size() != family.dim_theta()) throw DimensionMismatch("ab_antithetic: theta has wrong dimension");
  const int kbar = k2 / 2;
  OuterProductSum ops(family, theta_2k);
  Matrix gam = ops.zero(), a = ops.zero(), b = ops.zero();
  for (int i = 0; i < samples.size(); ++i) {
    const auto f = samples.f_inner(i);
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < kbar; ++k) s1 += f[k];
    for (int k = kbar; k < k2; ++k) s2 += f[k];
    const double m1 = s1 / kbar, m2 = s2 / kbar;
    const double phi = ops.prepare(samples.x(i));
    const double r = phi - samples.inner_mean(i);
    const double r1 = phi - m1, r2 = phi - m2;
    ops.add(gam, r * r);
    ops.add(a, 2.0 * r * r - 0.5 * r1 * r1 - 0.5 * r2 * r2);
    // ½r1² + ½r2² − r² written as a square so B̂ is PSD in floating point too.
    const double half_gap = 0.5 * (m1 - m2);
    ops.add(b, 2.0 * kbar * half_gap * half_gap);
  }
  VarianceEstimates ve;
  ve.gamma_hat_2k = finish(gam, samples.size());
  ve.a_anti = finish(a, samples.size());
  ve.b_anti = finish(b, samples.size());
  ve.kbar = kbar;
  ve.n_used = samples.size();
  return ve;
}

std::pair<SymMatrix, SymMatrix> ab_difference(const SymMatrix& gamma_k1, int k1, const SymMatrix& gamma_k2, int k2) {
  if (!(k1 >= 1 && k2 > k1)) throw DomainError("ab_difference: need 1 <= k1 < k2");
  const double d = static_cast<double>(k2 - k1);
  const Matrix a = (k2 * gamma_k2.matrix() - k1 * gamma_k1.matrix()) / d;
  const Matrix b = (static_cast<double>(k1) * k2) * (gamma_k1.matrix() - gamma_k2.matrix()) / d;
  return {SymMatrix(a), SymMatrix(b)};
}

KEstimates k_estimators(const VarianceEstimates& ve, const SymMatrix& h, double cost_ratio, std::uint64_t k_cap) {
  if (!(cost_ratio > 0.0)) throw DomainError("k_estimators: cost_ratio must be positive");
  if (k_cap < 1) throw DomainError("k_estimators: k_cap must be >= 1");
  const auto q = ve.b_anti.dim();
  if (h.dim() != q || ve.a_anti.dim() != q || ve.gamma_hat_2k.dim() != q) {
    throw DimensionMismatch("k_estimators: matrix dimensions disagree");
  }

  double b_h, a_h, g_h, b_noh, a_noh, g_noh;
  if (q == 1) {
    const double hv = h(0, 0);
    if (!(hv > 0.0)) throw NotPositiveDefinite("k_estimators: h must be positive");
    b_h = b_noh = ve.b_anti(0, 0);
    a_h = a_noh = std::abs(ve.a_anti(0, 0));
    g_h = g_noh = ve.gamma_hat_2k(0, 0);
  } else {
    b_h = trace_whitened(ve.b_anti, h);
    a_h = trace_whitened_positive(ve.a_anti, h);
    g_h = trace_whitened(ve.gamma_hat_2k, h);
    b_noh = ve.b_anti.trace();
    a_noh = positive_part(ve.a_anti).trace();
    g_noh = ve.gamma_hat_2k.trace();
  }

  KEstimates out;
  const auto apply = [&](double num, double den, std::uint64_t& k, double& ratio) {
    const Ratio r = saturating_nu(num, den, cost_ratio, k_cap);
    k = r.k;
    ratio = r.value;
  };
  apply(b_h, a_h, out.k_a_h, out.ratio_a_h);
  apply(b_noh, a_noh, out.k_a_noh, out.ratio_a_noh);
  apply(b_h, g_h, out.k_g_h, out.ratio_g_h);
  apply(b_noh, g_noh, out.k_g_noh, out.ratio_g_noh);
  return out;
}

}  // namespace nlsmc
