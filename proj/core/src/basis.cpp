#include "nested_lsmc/basis.hpp"

#include <cmath>
#include <numeric>

#include "nested_lsmc/errors.hpp"

namespace nlsmc {

void LinearFamily::sparse_features(Point x, SparseFeatures& out) const {
  Vector u;
  features(x, u);
  out.clear();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u(i) != 0.0) {
      out.index.push_back(static_cast<int>(i));
      out.value.push_back(u(i));
    }
  }
}

double LinearFamily::eval(const Vector& theta, Point x) const {
  if (theta.size() != dim_theta()) throw DimensionMismatch("eval: theta has wrong dimension");
  Vector u;
  features(x, u);
  return theta.dot(u);
}

void LinearFamily::grad(const Vector& theta, Point x, Vector& out) const {
  if (theta.size() != dim_theta()) throw DimensionMismatch("grad: theta has wrong dimension");
  features(x, out);
}

void LinearFamily::hess(const Vector& theta, Point, Matrix& out) const {
  if (theta.size() != dim_theta()) throw DimensionMismatch("hess: theta has wrong dimension");
  out.setZero(dim_theta(), dim_theta());
}

void ConstantFamily::features(Point, Vector& out) const { out.setOnes(1); }

void ConstantFamily::sparse_features(Point, SparseFeatures& out) const {
  out.clear();
  out.index.push_back(0);
  out.value.push_back(1.0);
}

PolynomialFamily::PolynomialFamily(int degree) : degree_(degree) {
  if (degree < 0) throw DomainError("polynomial_family: degree must be non-negative");
}

void PolynomialFamily::features(Point x, Vector& out) const {
  if (x.size() != 1) throw DomainError("polynomial_family: input must be one-dimensional");
  out.resize(degree_ + 1);
  double p = 1.0;
  for (int k = 0; k <= degree_; ++k) {
    out(k) = p;
    p *= x[0];
  }
}

NormalizingTransform::NormalizingTransform(double center, double scale) : center_(center), scale_(scale) {
  if (!(scale > 0.0)) throw DomainError("NormalizingTransform: scale must be positive");
}

double NormalizingTransform::operator()(double x) const {
  return 0.5 * std::erfc(-(x - center_) / scale_);
}

double NormalizingTransform::inverse(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("NormalizingTransform::inverse: u must be in (0,1)");
  double lo = -40.0, hi = 40.0;  // standardized units
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid) < u) lo = mid; else hi = mid;
  }
  return center_ + scale_ * 0.5 * (lo + hi);
}

NormalizingTransform normalizing_transform(std::span<const double> samples) {
  if (samples.size() < 2) throw DegenerateSamples("normalizing_transform: need at least 2 samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw DegenerateSamples("normalizing_transform: samples have zero spread");
  return NormalizingTransform(mean, sd);
}

PiecewiseFamily::PiecewiseFamily(PiecewiseSpec spec) : spec_(std::move(spec)) {
  if (spec_.cells_per_dim < 1) throw DomainError("piecewise_family: need at least one cell");
  if (spec_.dim_x < 1) throw DomainError("piecewise_family: dim_x must be positive");
  if (spec_.transforms.empty()) spec_.transforms.emplace_back();
  if (spec_.transforms.size() != 1 && static_cast<int>(spec_.transforms.size()) != spec_.dim_x) {
    throw DimensionMismatch("piecewise_family: need one transform or one per coordinate");
  }
  q_ = 1;
  for (int j = 0; j < spec_.dim_x; ++j) q_ *= spec_.cells_per_dim;
}

const NormalizingTransform& PiecewiseFamily::transform(int coord) const {
  return spec_.transforms.size() == 1 ? spec_.transforms.front() : spec_.transforms[coord];
}

int PiecewiseFamily::cell_of_unit(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("piecewise_family: transformed value outside [0,1]");
  const int m = spec_.cells_per_dim;
  return std::min(static_cast<int>(u * m), m - 1);
}

int PiecewiseFamily::cell_of(Point x) const {
  if (static_cast<int>(x.size()) != spec_.dim_x) throw DimensionMismatch("piecewise_family: wrong input dimension");
  int n = 0, stride = 1;
  for (int j = 0; j < spec_.dim_x; ++j) {
    n += stride * cell_of_unit(transform(j)(x[j]));
    stride *= spec_.cells_per_dim;
  }
  return n;
}

void PiecewiseFamily::features(Point x, Vector& out) const {
  out.setZero(q_);
  out(cell_of(x)) = 1.0;
}

void PiecewiseFamily::sparse_features(Point x, SparseFeatures& out) const {
  out.clear();
  out.index.push_back(cell_of(x));
  out.value.push_back(1.0);
}

std::vector<double> PiecewiseFamily::cell_edges() const {
  if (spec_.dim_x != 1) throw DomainError("cell_edges: only defined for one-dimensional input");
  std::vector<double> edges;
  const int m = spec_.cells_per_dim;
  for (int a = 1; a < m; ++a) edges.push_back(transform(0).inverse(static_cast<double>(a) / m));
  return edges;
}

double TanhFamily::eval(const Vector& theta, Point x) const {
  return theta(0) + theta(1) * std::tanh(theta(2) * x[0]);
}

void TanhFamily::grad(const Vector& theta, Point x, Vector& out) const {
  const double th = std::tanh(theta(2) * x[0]);
  const double sech2 = 1.0 - th * th;
  out.resize(3);
  out << 1.0, th, theta(1) * x[0] * sech2;
}

void TanhFamily::hess(const Vector& theta, Point x, Matrix& out) const {
  const double th = std::tanh(theta(2) * x[0]);
  const double sech2 = 1.0 - th * th;
  out.setZero(3, 3);
  out(1, 2) = out(2, 1) = x[0] * sech2;
  out(2, 2) = -2.0 * theta(1) * x[0] * x[0] * sech2 * th;
}

ConstantFamily constant_family() { return {}; }
PolynomialFamily polynomial_family(int degree) { return PolynomialFamily(degree); }
PiecewiseFamily piecewise_family(PiecewiseSpec spec) { return PiecewiseFamily(std::move(spec)); }

std::shared_ptr<const LinearFamily> make_family(const BasisConfig& cfg, std::span<const double> outer_x) {
  switch (cfg.kind) {
    case BasisKind::constant: return std::make_shared<ConstantFamily>();
    case BasisKind::poly: return std::make_shared<PolynomialFamily>(cfg.degree);
    case BasisKind::piecewise: {
      PiecewiseSpec spec;
      spec.cells_per_dim = cfg.cells;
      spec.transforms = {normalizing_transform(outer_x)};
      return std::make_shared<PiecewiseFamily>(std::move(spec));
    }
  }
  throw DomainError("unknown basis");
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::constant: return "constant";
    case BasisKind::poly: return "poly";
    case BasisKind::piecewise: return "piecewise";
  }
  return "unknown";
}

BasisKind parse_basis_kind(const std::string& name) {
  if (name == "constant") return BasisKind::constant;
  if (name == "poly") return BasisKind::poly;
  if (name == "piecewise") return BasisKind::piecewise;
  throw DomainError("unknown basis '" + name + "'");
}

}  // namespace nlsmc
