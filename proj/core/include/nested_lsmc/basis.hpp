#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nested_lsmc/linalg.hpp"
#include "nested_lsmc/model.hpp"

namespace nlsmc {

/// Nonzero entries of a feature vector, as parallel index/value arrays.
struct SparseFeatures {
  std::vector<int> index;
  std::vector<double> value;
  void clear() {
    index.clear();
    value.clear();
  }
};

/// A differentiable family φ(θ, x), θ ∈ ℝ^q.
class ParamFamily {
 public:
  virtual ~ParamFamily() = default;

  virtual int dim_theta() const = 0;
  virtual std::string name() const = 0;
  virtual double eval(const Vector& theta, Point x) const = 0;
  /// ∇_θ φ(θ, x), written to `out` (resized to q).
  virtual void grad(const Vector& theta, Point x, Vector& out) const = 0;
  /// ∇²_θ φ(θ, x), written to `out` (resized to q×q).
  virtual void hess(const Vector& theta, Point x, Matrix& out) const = 0;
  virtual bool is_linear() const { return false; }
};

/// φ(θ, x) = θ·u(x).
class LinearFamily : public ParamFamily {
 public:
  virtual void features(Point x, Vector& out) const = 0;
  /// Nonzero entries of u(x). The default gathers them from features().
  virtual void sparse_features(Point x, SparseFeatures& out) const;

  double eval(const Vector& theta, Point x) const override;
  void grad(const Vector& theta, Point x, Vector& out) const override;
  void hess(const Vector& theta, Point x, Matrix& out) const override;
  bool is_linear() const final { return true; }
};

class ConstantFamily final : public LinearFamily {
 public:
  int dim_theta() const override { return 1; }
  std::string name() const override { return "constant"; }
  void features(Point x, Vector& out) const override;
  void sparse_features(Point x, SparseFeatures& out) const override;
};

/// u(x) = [1, x, ..., x^degree] for scalar x.
class PolynomialFamily final : public LinearFamily {
 public:
  explicit PolynomialFamily(int degree);
  int degree() const { return degree_; }
  int dim_theta() const override { return degree_ + 1; }
  std::string name() const override { return "poly"; }
  void features(Point x, Vector& out) const override;

 private:
  int degree_;
};

/// Standardize with a fitted center/scale, then map into (0,1) by
/// z ↦ (1 + erf(z))/2, evaluated as erfc(−z)/2 so the lower tail stays positive.
/// Above z ≈ 6 the value rounds to 1, which the closed last cell absorbs.
class NormalizingTransform {
 public:
  NormalizingTransform() = default;
  NormalizingTransform(double center, double scale);

  double center() const { return center_; }
  double scale() const { return scale_; }
  double operator()(double x) const;
  /// Inverse of the map on (0,1), by bisection.
  double inverse(double u) const;

 private:
  double center_ = 0.0;
  double scale_ = 1.0;
};

/// Fits center = sample mean, scale = sample standard deviation (n−1).
/// Throws DegenerateSamples for fewer than 2 samples or zero spread.
NormalizingTransform normalizing_transform(std::span<const double> samples);

struct PiecewiseSpec {
  int cells_per_dim = 1;
  int dim_x = 1;
  /// One transform per input coordinate; a single entry is reused for every coordinate.
  std::vector<NormalizingTransform> transforms{NormalizingTransform{}};
};

/// One-hot indicators of the cells [a/M, (a+1)/M) of the transformed input,
/// the last cell closed at 1; q = M^d with n = a_1 + a_2·M + ... + a_d·M^{d−1}.
class PiecewiseFamily final : public LinearFamily {
 public:
  explicit PiecewiseFamily(PiecewiseSpec spec);

  const PiecewiseSpec& spec() const { return spec_; }
  int dim_theta() const override { return q_; }
  std::string name() const override { return "piecewise"; }
  void features(Point x, Vector& out) const override;
  void sparse_features(Point x, SparseFeatures& out) const override;

  /// Cell index for an already-transformed value in [0,1] (d = 1).
  int cell_of_unit(double u) const;
  int cell_of(Point x) const;
  /// Interior cell boundaries mapped back to the original scale (d = 1):
  /// boundary a (1 ≤ a < M) is where the transform equals a/M.
  std::vector<double> cell_edges() const;

 private:
  const NormalizingTransform& transform(int coord) const;

  PiecewiseSpec spec_;
  int q_;
};

/// θ₀ + θ₁·tanh(θ₂·x): a small nonlinear family for the descent fitter.
class TanhFamily final : public ParamFamily {
 public:
  int dim_theta() const override { return 3; }
  std::string name() const override { return "tanh"; }
  double eval(const Vector& theta, Point x) const override;
  void grad(const Vector& theta, Point x, Vector& out) const override;
  void hess(const Vector& theta, Point x, Matrix& out) const override;
};

ConstantFamily constant_family();
PolynomialFamily polynomial_family(int degree);
PiecewiseFamily piecewise_family(PiecewiseSpec spec);

enum class BasisKind { constant, poly, piecewise };

struct BasisConfig {
  BasisKind kind = BasisKind::constant;
  int degree = 3;
  int cells = 50;
};

/// Builds the configured family. `outer_x` (the reference outer sample, d = 1)
/// is used only to fit the piecewise transform.
std::shared_ptr<const LinearFamily> make_family(const BasisConfig& cfg, std::span<const double> outer_x);
std::string to_string(BasisKind kind);
BasisKind parse_basis_kind(const std::string& name);

}  // namespace nlsmc
