#include "nested_lsmc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "nested_lsmc/alloc.hpp"
#include "nested_lsmc/errors.hpp"
#include "nested_lsmc/quadrature.hpp"

namespace nlsmc {
namespace {

int scaled(int value, double scale) {
  return std::max(1, static_cast<int>(std::llround(static_cast<double>(value) * scale)));
}

SymMatrix usable_hessian(const SymMatrix& h, double eps) {
  try {
    spd_solve(h, Vector::Zero(h.dim()));
    return h;
  } catch (const NotPositiveDefinite&) {
    return eig_floor(h, eps);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (replications < 1) throw DomainError("replications must be >= 1");
  if (base_n < 1) throw DomainError("base_n must be >= 1");
  if (theta_star_n < 2) throw DomainError("theta_star_n must be >= 2");
  if (kdist_n < 2) throw DomainError("kdist_n must be >= 2");
  if (k_grid.empty()) throw DomainError("k_grid must not be empty");
  if (std::find(k_grid.begin(), k_grid.end(), 1) == k_grid.end()) throw DomainError("k_grid must contain 1");
  for (int k : k_grid)
    if (k < 1) throw DomainError("k_grid entries must be >= 1");
  if (budget && !(*budget > 0.0)) throw DomainError("budget must be positive");
  if (quad_nodes < 1) throw DomainError("quad_nodes must be >= 1");
  if (threads < 1) throw DomainError("threads must be >= 1");
  if (!(scale > 0.0)) throw DomainError("scale must be positive");
  if (estimators.kbar_a < 1) throw DomainError("kbar_a must be >= 1");
  if (estimators.kbar_gamma < 1) throw DomainError("kbar_gamma must be >= 1");
  if (estimators.k_cap < 1) throw DomainError("k_cap must be >= 1");
  if (!(fit.eps > 0.0)) throw DomainError("eps must be positive");
  if (!(fit.tol > 0.0)) throw DomainError("tol must be positive");
  if (fit.max_iter < 1) throw DomainError("max_iter must be >= 1");
  if (basis.degree < 0) throw DomainError("degree must be >= 0");
  if (basis.cells < 1) throw DomainError("cells must be >= 1");
}

int ExperimentConfig::scaled_replications() const { return scaled(replications, scale); }
int ExperimentConfig::scaled_kdist_n() const { return std::max(2, scaled(kdist_n, scale)); }
int ExperimentConfig::scaled_base_n() const { return scaled(base_n, scale); }

std::uint64_t purpose_word(StreamPurpose p, std::uint64_t sub) {
  return (static_cast<std::uint64_t>(p) << 32) | (sub & 0xffffffffULL);
}

FitConfig resolve_fit(const FitConfig& fit, BasisKind basis) {
  FitConfig out = fit;
  if (basis == BasisKind::piecewise && out.method == FitMethod::closed_form) out.method = FitMethod::regularized;
  return out;
}

ReferenceContext build_reference(const ExperimentConfig& cfg) {
  cfg.validate();
  ReferenceContext ctx;
  ctx.model = make_model(cfg.model);
  const NestedSamples ref =
      draw_nested(ctx.model, cfg.theta_star_n, 1, SeedSpec{cfg.seed, {purpose_word(StreamPurpose::reference)}});
  ctx.family = make_family(cfg.basis, ref.first_coordinates());
  ctx.fit = resolve_fit(cfg.fit, cfg.basis.kind);
  ctx.theta_star = fit(ref, *ctx.family, ctx.fit).theta;
  return ctx;
}

Vector reference_theta(const ExperimentConfig& cfg) { return build_reference(cfg).theta_star; }

double suboptimality_gap(const ReferenceContext& ctx, int k, int n, const SeedSpec& stream) {
  const NestedSamples s = draw_nested(ctx.model, n, k, stream);
  const FitResult fr = fit(s, *ctx.family, ctx.fit);
  return objective(s, *ctx.family, ctx.theta_star) - fr.objective;
}

double effective_budget(const ExperimentConfig& cfg, double cost_ratio) {
  if (cfg.budget) return *cfg.budget * cfg.scale;
  return static_cast<double>(cfg.scaled_base_n()) * (1.0 + cost_ratio);
}

int n_prime(const ExperimentConfig& cfg, double cost_ratio, int k) {
  if (k == 1 && !cfg.budget) return cfg.scaled_base_n();
  const std::uint64_t n = floor_budget(effective_budget(cfg, cost_ratio), cost_ratio, static_cast<std::uint64_t>(k));
  if (n < 1) throw BudgetTooSmall("budget leaves no outer sample at k = " + std::to_string(k));
  return static_cast<int>(n);
}

std::vector<double> run_replications(int count, int threads, const std::function<double(int)>& fn) {
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int j = 0; j < count; ++j) out[j] = fn(j);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int j = next.fetch_add(1); j < count; j = next.fetch_add(1)) {
      try {
        out[j] = fn(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

double pairwise_sum(const std::vector<double>& v) {
  const std::function<double(std::size_t, std::size_t)> rec = [&](std::size_t lo, std::size_t hi) -> double {
    if (hi - lo <= 8) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += v[i];
      return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return rec(lo, mid) + rec(mid, hi);
  };
  return rec(0, v.size());
}

SampleStats sample_stats(const std::vector<double>& v) {
  SampleStats s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean = pairwise_sum(v) / n;
  if (v.size() > 1) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - s.mean) * (v[i] - s.mean);
    s.sd = std::sqrt(pairwise_sum(sq) / (n - 1.0));
    s.se = s.sd / std::sqrt(n);
  }
  return s;
}

std::vector<double> gap_replications(const ReferenceContext& ctx, int k, int n, int replications,
                                     std::uint64_t seed, std::uint64_t word, int threads) {
  return run_replications(replications, threads, [&](int j) {
    return suboptimality_gap(ctx, k, n, SeedSpec{seed, {word, static_cast<std::uint64_t>(j)}});
  });
}

void aggregate_gain(GainCurve& curve) {
  const GainEntry* base = nullptr;
  for (auto& e : curve.entries) {
    const SampleStats st = sample_stats(e.gaps);
    e.gap_mean = st.mean;
    e.gap_se = st.se;
    if (e.k == 1) base = &e;
  }
  if (base == nullptr) throw DomainError("gain curve has no k = 1 entry");
  const double m1 = base->gap_mean, se1 = base->gap_se;
  for (auto& e : curve.entries) {
    if (e.k == 1) {
      e.r_hat = 1.0;
      e.r_hat_se = 0.0;
      continue;
    }
    e.r_hat = e.gap_mean / m1;
    const double rel_k = e.gap_se / e.gap_mean, rel_1 = se1 / m1;
    e.r_hat_se = std::abs(e.r_hat) * std::sqrt(rel_k * rel_k + rel_1 * rel_1);
  }
}

GainCurve gain_curve(const ExperimentConfig& cfg) { return gain_curve(cfg, build_reference(cfg)); }

GainCurve gain_curve(const ExperimentConfig& cfg, const ReferenceContext& ctx) {
  cfg.validate();
  GainCurve curve;
  curve.cost_ratio = ctx.model.cost_ratio;
  const int reps = cfg.scaled_replications();
  for (int k : cfg.k_grid) {
    GainEntry e;
    e.k = k;
    e.n_prime = n_prime(cfg, curve.cost_ratio, k);
    e.gaps = gap_replications(ctx, k, e.n_prime, reps, cfg.seed,
                              purpose_word(StreamPurpose::gain, static_cast<std::uint64_t>(k)), cfg.threads);
    curve.entries.push_back(std::move(e));
  }
  aggregate_gain(curve);
  return curve;
}

KEstimates estimate_k_once(const ReferenceContext& ctx, const EstimatorConfig& est, int n, const SeedSpec& stream) {
  const int k_full = 2 * std::max(est.kbar_a, est.kbar_gamma);
  const NestedSamples full = draw_nested(ctx.model, n, k_full, stream);
  const auto at_kbar = [&](int kbar) {
    const NestedSamples s = (2 * kbar == k_full) ? full : full.prefix_inner(2 * kbar);
    const FitResult fr = fit(s, *ctx.family, ctx.fit);
    const VarianceEstimates ve = ab_antithetic(s, *ctx.family, fr.theta);
    const SymMatrix h = usable_hessian(fr.hessian_hat, ctx.fit.eps);
    return k_estimators(ve, h, ctx.model.cost_ratio, est.k_cap);
  };
  const KEstimates a = at_kbar(est.kbar_a);
  const KEstimates g = est.kbar_gamma == est.kbar_a ? a : at_kbar(est.kbar_gamma);
  KEstimates out = a;
  out.k_g_h = g.k_g_h;
  out.k_g_noh = g.k_g_noh;
  out.ratio_g_h = g.ratio_g_h;
  out.ratio_g_noh = g.ratio_g_noh;
  return out;
}

KDistribution k_distribution(const ExperimentConfig& cfg) { return k_distribution(cfg, build_reference(cfg)); }

KDistribution k_distribution(const ExperimentConfig& cfg, const ReferenceContext& ctx) {
  cfg.validate();
  const int reps = cfg.scaled_replications();
  const int n = cfg.scaled_kdist_n();
  std::vector<KEstimates> per_rep(static_cast<std::size_t>(reps));
  run_replications(reps, cfg.threads, [&](int j) {
    per_rep[j] = estimate_k_once(ctx, cfg.estimators, n,
                                 SeedSpec{cfg.seed, {purpose_word(StreamPurpose::k_distribution),
                                                     static_cast<std::uint64_t>(j)}});
    return 0.0;
  });
  KDistribution d;
  d.values.assign(4, {});
  d.histogram.assign(4, {});
  for (const KEstimates& e : per_rep) {
    const std::uint64_t v[4] = {e.k_a_h, e.k_a_noh, e.k_g_h, e.k_g_noh};
    for (int i = 0; i < 4; ++i) {
      d.values[i].push_back(v[i]);
      ++d.histogram[i][v[i]];
    }
  }
  for (int i = 0; i < 4; ++i) {
    std::vector<double> as_double(d.values[i].begin(), d.values[i].end());
    const SampleStats st = sample_stats(as_double);
    d.mean.push_back(st.mean);
    d.sd.push_back(st.sd);
  }
  return d;
}

EstimateKResult estimate_k(const ExperimentConfig& cfg) {
  const ReferenceContext ctx = build_reference(cfg);
  EstimateKResult r;
  r.cost_ratio = ctx.model.cost_ratio;
  r.k = estimate_k_once(ctx, cfg.estimators, cfg.scaled_kdist_n(),
                        SeedSpec{cfg.seed, {purpose_word(StreamPurpose::estimate_k), 0}});
  r.recommended_k = r.k.k_g_noh;
  r.xi = r.k.ratio_g_noh;
  r.budget = effective_budget(cfg, r.cost_ratio);
  r.r_star = std::isfinite(r.xi) ? optimal_gain(r.xi, r.cost_ratio)
                                 : r.cost_ratio / (1.0 + r.cost_ratio);
  r.n_star = floor_budget(r.budget, r.cost_ratio, r.recommended_k);
  return r;
}

double fitted_expected_loss(const ButterflyParams& p, const LinearFamily& family, const Vector& theta,
                            int quad_nodes) {
  std::vector<double> breaks;
  if (const auto* pw = dynamic_cast<const PiecewiseFamily*>(&family)) {
    const double vol = p.sigma * std::sqrt(p.t);
    for (double edge : pw->cell_edges()) {
      if (edge > 0.0) breaks.push_back((std::log(edge / p.s0) + 0.5 * vol * vol) / vol);
    }
  }
  double x[1];
  const auto g = [&](double z) {
    x[0] = p.spot_at(z);
    return std::max(family.eval(theta, Point(x, 1)), 0.0);
  };
  return normal_expectation_checked(g, quad_nodes, breaks);
}

LossStudy loss_mse(const ExperimentConfig& cfg) {
  if (cfg.model.kind != ModelKind::butterfly) throw DomainError("loss_mse requires model = butterfly");
  const ReferenceContext ctx = build_reference(cfg);
  const ButterflyParams& p = cfg.model.butterfly;
  LossStudy study;
  study.reference_loss = butterfly_expected_loss(p, cfg.quad_nodes);
  const int reps = cfg.scaled_replications();
  for (int k : cfg.k_grid) {
    LossEntry e;
    e.k = k;
    e.n_prime = n_prime(cfg, ctx.model.cost_ratio, k);
    const std::uint64_t word = purpose_word(StreamPurpose::loss, static_cast<std::uint64_t>(k));
    e.estimates = run_replications(reps, cfg.threads, [&](int j) {
      const NestedSamples s = draw_nested(ctx.model, e.n_prime, k, SeedSpec{cfg.seed, {word, static_cast<std::uint64_t>(j)}});
      const FitResult fr = fit(s, *ctx.family, ctx.fit);
      return fitted_expected_loss(p, *ctx.family, fr.theta, cfg.quad_nodes);
    });
    std::vector<double> sq(e.estimates.size());
    for (std::size_t j = 0; j < sq.size(); ++j) {
      const double d = e.estimates[j] - study.reference_loss;
      sq[j] = d * d;
    }
    const SampleStats st = sample_stats(sq);
    e.mse = st.mean;
    e.se = st.se;
    study.entries.push_back(std::move(e));
  }
  return study;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_gain_curve_csv(std::ostream& out, const GainCurve& curve) {
  out << "k,n_prime,gap_mean,gap_se,r_hat,r_hat_se\n";
  for (const auto& e : curve.entries) {
    out << e.k << ',' << e.n_prime << ',' << format_double(e.gap_mean) << ',' << format_double(e.gap_se) << ','
        << format_double(e.r_hat) << ',' << format_double(e.r_hat_se) << '\n';
  }
}

void write_k_dist_csv(std::ostream& out, const KDistribution& dist) {
  out << "estimator,value,count\n";
  const auto& names = k_estimator_names();
  for (std::size_t i = 0; i < dist.histogram.size(); ++i) {
    for (const auto& [value, count] : dist.histogram[i]) out << names[i] << ',' << value << ',' << count << '\n';
  }
}

void write_loss_mse_csv(std::ostream& out, const LossStudy& study) {
  out << "k,mse,se\n";
  for (const auto& e : study.entries) out << e.k << ',' << format_double(e.mse) << ',' << format_double(e.se) << '\n';
}

}  // namespace nlsmc
