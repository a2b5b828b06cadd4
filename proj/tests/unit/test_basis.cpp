#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include <nested_lsmc/basis.hpp>
#include <nested_lsmc/errors.hpp>

using namespace nlsmc;

namespace {

Point pt(const double& x) { return Point(&x, 1); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

PiecewiseFamily unit_piecewise(int m) {
  // center 0, scale 1: the map is (1 + erf(x))/2
  PiecewiseSpec spec;
  spec.cells_per_dim = m;
  spec.transforms = {NormalizingTransform(0.0, 1.0)};
  return PiecewiseFamily(spec);
}

// Central finite-difference checks of grad against eval and hess against grad.
void check_derivatives(const ParamFamily& f, std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  const int q = f.dim_theta();
  for (int trial = 0; trial < 100; ++trial) {
    Vector theta(q);
    for (int i = 0; i < q; ++i) theta(i) = n(gen);
    const double x = n(gen);
    Vector g;
    Matrix h;
    f.grad(theta, pt(x), g);
    f.hess(theta, pt(x), h);
    const double step = 1e-6;
    for (int i = 0; i < q; ++i) {
      Vector tp = theta, tm = theta;
      tp(i) += step;
      tm(i) -= step;
      const double fd = (f.eval(tp, pt(x)) - f.eval(tm, pt(x))) / (2 * step);
      CHECK(std::abs(fd - g(i)) <= 1e-5 * std::max(1.0, std::abs(g(i))));
      Vector gp, gm;
      f.grad(tp, pt(x), gp);
      f.grad(tm, pt(x), gm);
      for (int j = 0; j < q; ++j) {
        const double fdh = (gp(j) - gm(j)) / (2 * step);
        CHECK(std::abs(fdh - h(i, j)) <= 1e-5 * std::max(1.0, std::abs(h(i, j))));
      }
    }
  }
}

}  // namespace

TEST_SUITE("basis") {

TEST_CASE("constant family") {
  const ConstantFamily f = constant_family();
  const double x = 12.5;
  CHECK(f.dim_theta() == 1);
  CHECK(f.eval(vec({3.0}), pt(x)) == 3.0);
  Vector g;
  Matrix h;
  f.grad(vec({3.0}), pt(x), g);
  f.hess(vec({3.0}), pt(x), h);
  CHECK(g.size() == 1);
  CHECK(g(0) == 1.0);
  CHECK(h(0, 0) == 0.0);
}

TEST_CASE("polynomial family") {
  const PolynomialFamily p0 = polynomial_family(0);
  const double x = 2.0;
  CHECK(p0.dim_theta() == 1);
  CHECK(p0.eval(vec({4.0}), pt(x)) == 4.0);
  const PolynomialFamily p3 = polynomial_family(3);
  CHECK(p3.eval(vec({0, 0, 0, 1}), pt(x)) == 8.0);
  CHECK(p3.eval(vec({1, 1, 1, 1}), pt(x)) == 15.0);
  const double two[2] = {1.0, 2.0};
  Vector u;
  CHECK_THROWS_AS(p3.features(Point(two, 2), u), DomainError);
  CHECK_THROWS_AS(polynomial_family(-1), DomainError);
}

TEST_CASE("linear families are linear in theta") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n;
  const auto pw = unit_piecewise(10);
  const PolynomialFamily poly(4);
  const ConstantFamily c;
  const LinearFamily* families[] = {&pw, &poly, &c};
  for (const LinearFamily* f : families) {
    for (int trial = 0; trial < 50; ++trial) {
      const int q = f->dim_theta();
      Vector t1(q), t2(q);
      for (int i = 0; i < q; ++i) {
        t1(i) = n(gen);
        t2(i) = n(gen);
      }
      const double a = n(gen), b = n(gen), x = n(gen);
      const double lhs = f->eval(a * t1 + b * t2, pt(x));
      const double rhs = a * f->eval(t1, pt(x)) + b * f->eval(t2, pt(x));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
      Vector u, g;
      f->features(pt(x), u);
      f->grad(t1, pt(x), g);
      CHECK((u - g).norm() == 0.0);
      SparseFeatures sf;
      f->sparse_features(pt(x), sf);
      Vector dense = Vector::Zero(q);
      for (std::size_t j = 0; j < sf.index.size(); ++j) dense(sf.index[j]) = sf.value[j];
      CHECK((dense - u).norm() == 0.0);
    }
  }
}

TEST_CASE("normalizing transform") {
  const NormalizingTransform t(3.0, 2.0);
  CHECK(t(3.0) == 0.5);
  CHECK(t(5.0) == doctest::Approx(0.5 * (1.0 + oracle::erf_series(1.0))).epsilon(1e-14));
  CHECK(t(5.0) == doctest::Approx(0.92135039647485).epsilon(1e-12));
  CHECK(t(1e6) <= 1.0);
  CHECK(t(40.0) > 0.999999);
  CHECK(t(-30.0) > 0.0);
  CHECK(t(-30.0) < 1e-6);
  for (double u : {0.01, 0.3, 0.5, 0.77, 0.99}) CHECK(t(t.inverse(u)) == doctest::Approx(u).epsilon(1e-12));
  CHECK_THROWS_AS(NormalizingTransform(0.0, 0.0), DomainError);
}

TEST_CASE("fitting the transform") {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  const NormalizingTransform t = normalizing_transform(s);
  CHECK(t.center() == 2.5);
  CHECK(t.scale() == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const std::vector<double> flat{2.0, 2.0, 2.0};
  CHECK_THROWS_AS(normalizing_transform(flat), DegenerateSamples);
  const std::vector<double> one{2.0};
  CHECK_THROWS_AS(normalizing_transform(one), DegenerateSamples);
}

TEST_CASE("piecewise cells") {
  const auto f = unit_piecewise(2);
  CHECK(f.dim_theta() == 2);
  CHECK(f.cell_of_unit(0.25) == 0);
  CHECK(f.cell_of_unit(0.5) == 1);
  CHECK(f.cell_of_unit(1.0) == 1);
  CHECK(f.cell_of_unit(0.0) == 0);
  CHECK_THROWS_AS(f.cell_of_unit(1.5), DomainError);
  CHECK_THROWS_AS(f.cell_of_unit(-0.1), DomainError);
  // transformed 0.25 ↔ x with erf(x) = −0.5
  Vector u;
  const double x = -0.4769362762044699;
  f.features(pt(x), u);
  CHECK(u(0) == 1.0);
  CHECK(u(1) == 0.0);
}

TEST_CASE("piecewise features partition the line") {
  const auto f = unit_piecewise(50);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<int> counts(50, 0);
  for (int i = 0; i < 10000; ++i) {
    const double x = n(gen);
    Vector u;
    f.features(pt(x), u);
    CHECK(u.sum() == 1.0);
    CHECK(u.maxCoeff() == 1.0);
    ++counts[f.cell_of(pt(x))];
  }
  for (int c : counts) CHECK(c > 0);
  const double big = 1e300;
  CHECK(f.cell_of(pt(big)) == 49);
  const double small = -1e300;
  CHECK(f.cell_of(pt(small)) == 0);
}

TEST_CASE("piecewise cell edges") {
  const auto f = unit_piecewise(4);
  const auto e = f.cell_edges();
  REQUIRE(e.size() == 3);
  CHECK(std::abs(e[1]) < 1e-12);
  CHECK(e[0] == doctest::Approx(-e[2]).epsilon(1e-12));
  for (std::size_t a = 0; a < e.size(); ++a) {
    const double below = e[a] - 1e-9, above = e[a] + 1e-9;
    CHECK(f.cell_of(pt(below)) == static_cast<int>(a));
    CHECK(f.cell_of(pt(above)) == static_cast<int>(a) + 1);
  }
}

TEST_CASE("two-dimensional piecewise index formula") {
  PiecewiseSpec spec;
  spec.cells_per_dim = 3;
  spec.dim_x = 2;
  spec.transforms = {NormalizingTransform(0.0, 1.0)};
  const PiecewiseFamily f(spec);
  CHECK(f.dim_theta() == 9);
  // cells a1 = 2 (large x1), a2 = 1 (x2 = 0) → n = 2 + 1·3
  const double x[2] = {5.0, 0.0};
  CHECK(f.cell_of(Point(x, 2)) == 5);
  const double one[1] = {0.0};
  CHECK_THROWS_AS(f.cell_of(Point(one, 1)), DimensionMismatch);
}

TEST_CASE("finite-difference derivatives of every family") {
  std::mt19937_64 gen(11);
  check_derivatives(ConstantFamily{}, gen);
  check_derivatives(PolynomialFamily(3), gen);
  check_derivatives(unit_piecewise(5), gen);
  check_derivatives(TanhFamily{}, gen);
}

TEST_CASE("make_family") {
  const std::vector<double> xs{-1.0, 0.0, 1.0, 2.0};
  CHECK(make_family({BasisKind::constant, 3, 50}, xs)->dim_theta() == 1);
  CHECK(make_family({BasisKind::poly, 3, 50}, xs)->dim_theta() == 4);
  const auto pw = make_family({BasisKind::piecewise, 3, 7}, xs);
  CHECK(pw->dim_theta() == 7);
  const auto& spec = dynamic_cast<const PiecewiseFamily&>(*pw).spec();
  CHECK(spec.transforms.front().center() == 0.5);
  CHECK(parse_basis_kind("poly") == BasisKind::poly);
  CHECK(to_string(BasisKind::piecewise) == "piecewise");
  CHECK_THROWS_AS(parse_basis_kind("spline"), DomainError);
}

}
