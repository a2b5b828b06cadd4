#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nested_lsmc/basis.hpp"
#include "nested_lsmc/estimators.hpp"
#include "nested_lsmc/model.hpp"
#include "nested_lsmc/regress.hpp"

namespace nlsmc {

struct EstimatorConfig {
  int kbar_a = 4;
  int kbar_gamma = 32;
  std::uint64_t k_cap = kDefaultKCap;
};

struct ExperimentConfig {
  ModelConfig model{};
  BasisConfig basis{};
  FitConfig fit{};
  EstimatorConfig estimators{};
  int replications = 2000;
  int base_n = 5000;
  int theta_star_n = 100000;
  int kdist_n = 50000;
  std::vector<int> k_grid{1, 2, 5, 10, 20, 50, 100};
  std::optional<double> budget;  // default base_n·(1 + cost_ratio)
  int quad_nodes = 64;
  std::uint64_t seed = 1;
  int threads = 1;
  double scale = 1.0;  // multiplies replications, base_n and kdist_n

  /// Throws DomainError naming the first invalid field.
  void validate() const;
  int scaled_replications() const;
  int scaled_kdist_n() const;
  int scaled_base_n() const;
};

/// Top-level purposes of random streams; distinct purposes never share draws.
enum class StreamPurpose : std::uint64_t {
  reference = 1,
  gain = 2,
  k_distribution = 3,
  loss = 4,
  estimate_k = 5,
  gap_study = 6,
};

/// (purpose << 32) | sub, the first element of every experiment stream path.
std::uint64_t purpose_word(StreamPurpose p, std::uint64_t sub = 0);

/// Model, family and θ̃★ shared by every replication of an experiment. The
/// piecewise transform is fitted on the reference outer sample and frozen,
/// so θ̃★ and every replication's fit live in the same family.
struct ReferenceContext {
  ConditionalModel model;
  std::shared_ptr<const LinearFamily> family;
  Vector theta_star;
  FitConfig fit;  // the resolved fit method (closed form promoted for piecewise)
};

ReferenceContext build_reference(const ExperimentConfig& cfg);

/// θ̃★ from one fit at (theta_star_n, K = 1).
Vector reference_theta(const ExperimentConfig& cfg);

/// Closed-form fits on the piecewise family go through the ε-regularized
/// estimator, since empty cells make the Gram matrix singular.
FitConfig resolve_fit(const FitConfig& fit, BasisKind basis);

/// One replication of v_N^K(θ̃★) − v_N^K(θ_N^K) on fresh draws from `stream`.
double suboptimality_gap(const ReferenceContext& ctx, int k, int n, const SeedSpec& stream);

/// Budget in units of one outer draw.
double effective_budget(const ExperimentConfig& cfg, double cost_ratio);

/// N'(K) = ⌊budget/(1 + K·C)⌋. Without an explicit budget, N'(1) is exactly the scaled base_n.
int n_prime(const ExperimentConfig& cfg, double cost_ratio, int k);

/// Runs fn(0..count−1) on `threads` workers; results are stored by index.
std::vector<double> run_replications(int count, int threads, const std::function<double(int)>& fn);

/// Pairwise (tree) summation; order depends only on the input length.
double pairwise_sum(const std::vector<double>& v);

struct SampleStats {
  double mean = 0.0;
  double sd = 0.0;  // n − 1 denominator
  double se = 0.0;
};
SampleStats sample_stats(const std::vector<double>& v);

/// J replications of the gap at (k, n) on paths [purpose_word, j].
std::vector<double> gap_replications(const ReferenceContext& ctx, int k, int n, int replications,
                                     std::uint64_t seed, std::uint64_t word, int threads);

struct GainEntry {
  int k = 1;
  int n_prime = 0;
  double gap_mean = 0.0;
  double gap_se = 0.0;
  double r_hat = 1.0;
  double r_hat_se = 0.0;
  std::vector<double> gaps;  // per replication
};

struct GainCurve {
  double cost_ratio = 1.0;
  std::vector<GainEntry> entries;
};

/// r̂^K = mean gap(K, N'(K)) / mean gap(1, N) with delta-method standard errors.
GainCurve gain_curve(const ExperimentConfig& cfg);
GainCurve gain_curve(const ExperimentConfig& cfg, const ReferenceContext& ctx);

/// Recomputes the aggregates of `entries` from their stored per-replication gaps.
void aggregate_gain(GainCurve& curve);

inline const std::vector<std::string>& k_estimator_names() {
  static const std::vector<std::string> names{"KA_H", "KA_noH", "KG_H", "KG_noH"};
  return names;
}

/// The four estimators on one nested draw. A-based values use kbar_a and
/// Γ-based values kbar_gamma; both come from prefixes of one draw at
/// 2·max(kbar_a, kbar_gamma) inner samples.
KEstimates estimate_k_once(const ReferenceContext& ctx, const EstimatorConfig& est, int n, const SeedSpec& stream);

struct KDistribution {
  // Indexed like k_estimator_names().
  std::vector<std::vector<std::uint64_t>> values;
  std::vector<std::map<std::uint64_t, std::uint64_t>> histogram;
  std::vector<double> mean;
  std::vector<double> sd;
};

KDistribution k_distribution(const ExperimentConfig& cfg);
KDistribution k_distribution(const ExperimentConfig& cfg, const ReferenceContext& ctx);

struct EstimateKResult {
  KEstimates k;
  std::uint64_t recommended_k = 1;  // the H-free Γ-based estimate
  double xi = 0.0;
  double r_star = 1.0;
  std::uint64_t n_star = 1;
  double budget = 0.0;
  double cost_ratio = 1.0;
};

/// One practitioner run: a single nested draw, the four estimators and the
/// allocation implied by the recommended K.
EstimateKResult estimate_k(const ExperimentConfig& cfg);

/// E[max(φ(θ, S_t), 0)] for a fitted butterfly regression, by quadrature in
/// z = W_t/√t split at the cell boundaries of a piecewise family.
double fitted_expected_loss(const ButterflyParams& p, const LinearFamily& family, const Vector& theta,
                            int quad_nodes);

struct LossEntry {
  int k = 1;
  int n_prime = 0;
  double mse = 0.0;
  double se = 0.0;
  std::vector<double> estimates;  // per-replication fitted loss
};

struct LossStudy {
  double reference_loss = 0.0;
  std::vector<LossEntry> entries;
};

LossStudy loss_mse(const ExperimentConfig& cfg);

void write_gain_curve_csv(std::ostream& out, const GainCurve& curve);
void write_k_dist_csv(std::ostream& out, const KDistribution& dist);
void write_loss_mse_csv(std::ostream& out, const LossStudy& study);

/// %.17g rendering used by every CSV writer.
std::string format_double(double v);

}  // namespace nlsmc
