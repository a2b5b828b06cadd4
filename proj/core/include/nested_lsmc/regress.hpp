#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nested_lsmc/basis.hpp"
#include "nested_lsmc/linalg.hpp"
#include "nested_lsmc/model.hpp"
#include "nested_lsmc/rng.hpp"

namespace nlsmc {

/// View of one outer draw with its K inner evaluations f(Y^{(k)}).
struct NestedSample {
  Point x;
  std::span<const double> f_inner;
  double inner_mean;
};

/// N outer draws, each with K inner values, stored contiguously.
class NestedSamples {
 public:
  NestedSamples() = default;
  NestedSamples(int dim_x, int n, int k);

  int size() const { return n_; }
  int inner_count() const { return k_; }
  int dim_x() const { return d_; }

  Point x(int i) const { return {x_.data() + static_cast<std::size_t>(i) * d_, static_cast<std::size_t>(d_)}; }
  std::span<const double> f_inner(int i) const {
    return {f_.data() + static_cast<std::size_t>(i) * k_, static_cast<std::size_t>(k_)};
  }
  double inner_mean(int i) const { return mean_[i]; }
  NestedSample operator[](int i) const { return {x(i), f_inner(i), inner_mean(i)}; }

  std::span<double> mutable_x(int i) { return {x_.data() + static_cast<std::size_t>(i) * d_, static_cast<std::size_t>(d_)}; }
  std::span<double> mutable_f_inner(int i) {
    return {f_.data() + static_cast<std::size_t>(i) * k_, static_cast<std::size_t>(k_)};
  }
  /// Recomputes inner_mean for every sample; call after filling f_inner.
  void update_means();

  /// Same outer draws keeping only the first k inner values.
  NestedSamples prefix_inner(int k) const;
  /// The first n outer draws.
  NestedSamples head(int n) const;
  /// All first coordinates (d = 1 convenience).
  std::vector<double> first_coordinates() const;

 private:
  int d_ = 1;
  int n_ = 0;
  int k_ = 1;
  std::vector<double> x_;
  std::vector<double> f_;
  std::vector<double> mean_;
};

/// Draws N outer samples with K conditionally independent inner draws each.
/// Outer draw i uses stream base/i/0 and inner draw k uses base/i/(k+1), so
/// `base` may carry at most two path entries. The inner draws for a given
/// (i, k) do not depend on K, so prefix_inner() of a larger draw equals a
/// smaller draw.
NestedSamples draw_nested(const ConditionalModel& model, int n, int k, const SeedSpec& base);

/// v_N^K(θ) = (1/N) Σ (φ(θ, X_i) − inner_mean_i)².
double objective(const NestedSamples& samples, const ParamFamily& family, const Vector& theta);

enum class FitMethod { closed_form, regularized, gradient_descent };
std::string to_string(FitMethod m);
FitMethod parse_fit_method(const std::string& name);

struct FitResult {
  Vector theta;
  double objective = 0.0;
  SymMatrix hessian_hat;
  FitMethod method = FitMethod::closed_form;
  int iterations = 0;
  bool converged = true;
};

struct FitConfig {
  FitMethod method = FitMethod::closed_form;
  double eps = 1e-12;
  double tol = 1e-8;
  int max_iter = 10000;
};

/// Gram matrix (1/N) Σ u(X_i)u(X_i)ᵀ and moment vector (1/N) Σ inner_mean_i·u(X_i).
struct NormalEquations {
  SymMatrix gram;
  Vector rhs;
};
NormalEquations normal_equations(const NestedSamples& samples, const LinearFamily& family);

/// Closed-form least squares. Throws SingularGram if the Gram matrix is not
/// positive definite (for example an empty piecewise cell).
FitResult fit_linear(const NestedSamples& samples, const LinearFamily& family);

/// θ = 2·((2/N Σ uuᵀ) ∨ εI)⁻¹ (1/N Σ inner_mean·u).
FitResult fit_linear_regularized(const NestedSamples& samples, const LinearFamily& family, double eps);

/// Gradient descent with Armijo backtracking from `init`. Stops when
/// ‖∇v_N^K‖∞ ≤ tol; if max_iter is reached first, the result is returned
/// with converged = false.
FitResult fit_descent(const NestedSamples& samples, const ParamFamily& family, const Vector& init,
                      double tol = 1e-8, int max_iter = 10000);

/// Dispatches on cfg.method; descent starts from θ = 0.
FitResult fit(const NestedSamples& samples, const LinearFamily& family, const FitConfig& cfg);

/// ∇v_N^K(θ) = (2/N) Σ (φ(θ,X_i) − inner_mean_i) ∇φ(θ,X_i).
Vector objective_gradient(const NestedSamples& samples, const ParamFamily& family, const Vector& theta);

/// Ĥ = ½∇²v_N^K(θ) = (1/N) Σ ∇φ∇φᵀ + (φ − inner_mean)∇²φ. For linear
/// families this is the Gram matrix (1/N) Σ uuᵀ.
SymMatrix hessian_hat(const NestedSamples& samples, const ParamFamily& family, const Vector& theta);

}  // namespace nlsmc
