#include "nested_lsmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nested_lsmc/errors.hpp"
#include "nested_lsmc/quadrature.hpp"

namespace nlsmc {

ConditionalModel gaussian_toy(double rho) {
  if (!(std::abs(rho) <= 1.0)) throw DomainError("gaussian_toy: |rho| must be <= 1");
  const double resid_sd = std::sqrt(1.0 - rho * rho);
  ConditionalModel m;
  m.name = "toy";
  m.dim_x = 1;
  m.cost_ratio = 1.0;
  m.sample_x = [](UniformStream& s, std::span<double> out) { out[0] = s.normal(); };
  m.sample_f_given_x = [rho, resid_sd](Point x, UniformStream& s) {
    const double y = rho * x[0] + resid_sd * s.normal();
    return y * y;
  };
  m.oracle_mean = [rho](Point x) { return rho * rho * x[0] * x[0] + 1.0 - rho * rho; };
  m.oracle_var = [rho](Point x) {
    const double v = 1.0 - rho * rho;
    return 2.0 * v * v + 4.0 * v * rho * rho * x[0] * x[0];
  };
  return m;
}

ConditionalModel cosine_sde(double t1, double t2, int steps_total) {
  if (!(t1 > 0.0) || !(t2 > t1)) throw DomainError("cosine_sde: need 0 < t1 < t2");
  if (steps_total < 2) throw DomainError("cosine_sde: need at least 2 steps");
  const double dt = t2 / steps_total;
  const int outer_steps = static_cast<int>(std::llround(t1 / dt));
  const int inner_steps = steps_total - outer_steps;
  if (outer_steps < 1 || inner_steps < 1) {
    throw DomainError("cosine_sde: grid leaves no step on one side of t1");
  }
  const double sqrt_dt = std::sqrt(dt);
  ConditionalModel m;
  m.name = "sde";
  m.dim_x = 1;
  m.cost_ratio = (t2 - t1) / t1;
  m.sample_x = [outer_steps, sqrt_dt](UniformStream& s, std::span<double> out) {
    double x = 0.0;
    for (int k = 0; k < outer_steps; ++k) x = euler_cos_step(x, sqrt_dt * s.normal());
    out[0] = x;
  };
  m.sample_f_given_x = [inner_steps, sqrt_dt](Point x0, UniformStream& s) {
    double x = x0[0];
    for (int k = 0; k < inner_steps; ++k) x = euler_cos_step(x, sqrt_dt * s.normal());
    return x * x;
  };
  return m;
}

void ButterflyParams::validate() const {
  if (!(s0 > 0.0)) throw DomainError("butterfly: s0 must be positive");
  if (!(sigma > 0.0)) throw DomainError("butterfly: sigma must be positive");
  if (!(k1 > 0.0) || !(k2 > k1)) throw DomainError("butterfly: need 0 < k1 < k2");
  if (!(shock > -1.0)) throw DomainError("butterfly: shock must exceed -1");
  if (!(t > 0.0) || !(T > t)) throw DomainError("butterfly: need 0 < t < T");
}

double ButterflyParams::spot_at(double z) const {
  return s0 * std::exp(sigma * std::sqrt(t) * z - 0.5 * sigma * sigma * t);
}

double butterfly_payoff(const ButterflyParams& p, double z) {
  return std::max(z - p.k1, 0.0) + std::max(z - p.k2, 0.0) - 2.0 * std::max(z - p.mid_strike(), 0.0);
}

double black_scholes_call(double spot, double strike, double total_vol) {
  if (spot <= 0.0) return 0.0;
  const double d1 = std::log(spot / strike) / total_vol + 0.5 * total_vol;
  return spot * normal_cdf(d1) - strike * normal_cdf(d1 - total_vol);
}

ConditionalModel butterfly_model(const ButterflyParams& p) {
  p.validate();
  const double tau = p.T - p.t;
  const double vol_tau = p.sigma * std::sqrt(tau);
  ConditionalModel m;
  m.name = "butterfly";
  m.dim_x = 1;
  m.cost_ratio = 1.0;
  m.sample_x = [p](UniformStream& s, std::span<double> out) { out[0] = p.spot_at(s.normal()); };
  m.sample_f_given_x = [p, vol_tau](Point x, UniformStream& s) {
    const double st = x[0] * std::exp(vol_tau * s.normal() - 0.5 * vol_tau * vol_tau);
    return butterfly_payoff(p, st) - butterfly_payoff(p, (1.0 + p.shock) * st);
  };
  m.oracle_mean = [p](Point x) { return butterfly_conditional_price(p, x[0]); };
  return m;
}

double butterfly_conditional_price(const ButterflyParams& p, double x) {
  if (!(x > 0.0)) throw DomainError("butterfly_conditional_price: spot must be positive");
  if (p.shock == 0.0) return 0.0;
  const double v = p.sigma * std::sqrt(p.T - p.t);
  const auto fly = [&](double spot) {
    return black_scholes_call(spot, p.k1, v) + black_scholes_call(spot, p.k2, v) -
           2.0 * black_scholes_call(spot, p.mid_strike(), v);
  };
  return fly(x) - fly((1.0 + p.shock) * x);
}

double butterfly_expected_loss(const ButterflyParams& p, int quad_nodes) {
  p.validate();
  if (quad_nodes < 32) throw DomainError("butterfly_expected_loss: quad_nodes must be >= 32");
  const auto price_at = [&p](double z) { return butterfly_conditional_price(p, p.spot_at(z)); };

  // max(price, 0) has kinks at the sign changes of the price; split there.
  std::vector<double> roots;
  constexpr int kScan = 4000;
  double z_prev = -10.0, v_prev = price_at(z_prev);
  for (int i = 1; i <= kScan; ++i) {
    const double z = -10.0 + 20.0 * i / kScan;
    const double v = price_at(z);
    if ((v_prev < 0.0) != (v < 0.0)) {
      double lo = z_prev, hi = z;
      const bool lo_negative = v_prev < 0.0;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((price_at(mid) < 0.0) == lo_negative) lo = mid; else hi = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    z_prev = z;
    v_prev = v;
  }
  return normal_expectation_checked([&](double z) { return std::max(price_at(z), 0.0); }, quad_nodes,
                                    roots);
}

ConditionalModel make_model(const ModelConfig& cfg) {
  ConditionalModel m;
  switch (cfg.kind) {
    case ModelKind::toy: m = gaussian_toy(cfg.rho); break;
    case ModelKind::sde: m = cosine_sde(cfg.t1, cfg.t2, cfg.steps); break;
    case ModelKind::butterfly: m = butterfly_model(cfg.butterfly); break;
  }
  if (cfg.cost_ratio_override) {
    if (!(*cfg.cost_ratio_override > 0.0)) throw DomainError("cost_ratio_override must be positive");
    m.cost_ratio = *cfg.cost_ratio_override;
  }
  return m;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::toy: return "toy";
    case ModelKind::sde: return "sde";
    case ModelKind::butterfly: return "butterfly";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "toy") return ModelKind::toy;
  if (name == "sde") return ModelKind::sde;
  if (name == "butterfly") return ModelKind::butterfly;
  throw DomainError("unknown model '" + name + "'");
}

}  // namespace nlsmc
