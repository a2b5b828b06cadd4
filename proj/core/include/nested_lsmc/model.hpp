#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "nested_lsmc/rng.hpp"

namespace nlsmc {

using Point = std::span<const double>;

/// A sampler of X together with a sampler of f(Y) given X = x.
///
/// cost_ratio is the cost of one inner draw in units of one outer draw.
/// The oracles, when present, give ψ(x) = E[f(Y)|X=x] and σ²(x) = Var(f(Y)|X=x).
struct ConditionalModel {
  std::string name;
  int dim_x = 1;
  std::function<void(UniformStream&, std::span<double>)> sample_x;
  std::function<double(Point, UniformStream&)> sample_f_given_x;
  double cost_ratio = 1.0;
  std::function<double(Point)> oracle_mean;
  std::function<double(Point)> oracle_var;

  bool has_oracle_mean() const { return static_cast<bool>(oracle_mean); }
  bool has_oracle_var() const { return static_cast<bool>(oracle_var); }
};

/// X ~ N(0,1), Y|X ~ N(ρX, 1−ρ²), f(y) = y², equal sampling costs.
ConditionalModel gaussian_toy(double rho);

/// One Euler step of dX = cos(X) dW.
inline double euler_cos_step(double x, double dw) noexcept;

/// dX = cos(X) dW from X₀ = 0 on a uniform grid of steps_total steps over
/// [0, t2]. X is the state at t1 and f(Y) the squared state at t2.
ConditionalModel cosine_sde(double t1, double t2, int steps_total);

struct ButterflyParams {
  double s0 = 100.0;
  double sigma = 0.2;
  double k1 = 90.0;
  double k2 = 110.0;
  double shock = 0.2;
  double t = 1.0;
  double T = 2.0;

  void validate() const;
  double mid_strike() const { return 0.5 * (k1 + k2); }
  /// Spot at the inner date for a standard normal z = W_t/√t.
  double spot_at(double z) const;
};

/// (z−k1)⁺ + (z−k2)⁺ − 2(z−(k1+k2)/2)⁺
double butterfly_payoff(const ButterflyParams& p, double z);

/// Undiscounted Black-Scholes call with zero rate; total_vol = σ√τ.
double black_scholes_call(double spot, double strike, double total_vol);

/// Black-Scholes model S with a multiplicative shock; f(Y) = ψ(S_T) − ψ((1+s)S_T).
ConditionalModel butterfly_model(const ButterflyParams& p);

/// E[ψ(S_T) − ψ((1+s)S_T) | S_t = x] in closed form.
double butterfly_conditional_price(const ButterflyParams& p, double x);

/// L = E[max(butterfly_conditional_price(p, S_t), 0)] by Gauss-Legendre
/// quadrature against the density of W_t/√t; checked by doubling.
double butterfly_expected_loss(const ButterflyParams& p, int quad_nodes = 64);

enum class ModelKind { toy, sde, butterfly };

struct ModelConfig {
  ModelKind kind = ModelKind::toy;
  double rho = 0.1;
  double t1 = 9.0;
  double t2 = 10.0;
  int steps = 200;
  ButterflyParams butterfly{};
  std::optional<double> cost_ratio_override;
};

ConditionalModel make_model(const ModelConfig& cfg);
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

inline double euler_cos_step(double x, double dw) noexcept { return x + std::cos(x) * dw; }

}  // namespace nlsmc
