#include <cmath>
#include <random>

#include "doctest.h"
#include <nested_lsmc/alloc.hpp>
#include <nested_lsmc/errors.hpp>
#include <nested_lsmc/estimators.hpp>

using namespace nlsmc;

namespace {

SymMatrix scalar(double v) {
  Matrix m(1, 1);
  m << v;
  return SymMatrix(m);
}

VarianceEstimates scalar_estimates(double a, double b, int kbar) {
  VarianceEstimates ve;
  ve.a_anti = scalar(a);
  ve.b_anti = scalar(b);
  ve.gamma_hat_2k = scalar(a + b / (2.0 * kbar));
  ve.kbar = kbar;
  ve.n_used = 1;
  return ve;
}

PiecewiseFamily unit_piecewise(int m) {
  PiecewiseSpec spec;
  spec.cells_per_dim = m;
  spec.transforms = {NormalizingTransform(0.0, 1.0)};
  return PiecewiseFamily(spec);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("gamma_hat of the constant family is the residual mean square") {
  const NestedSamples s = draw_nested(gaussian_toy(0.3), 500, 3, {1, {1}});
  const ConstantFamily f;
  const FitResult fr = fit_linear(s, f);
  double r2 = 0.0;
  for (int i = 0; i < s.size(); ++i) r2 += std::pow(fr.theta(0) - s.inner_mean(i), 2);
  CHECK(gamma_hat(s, f, fr.theta)(0, 0) == doctest::Approx(r2 / s.size()).epsilon(1e-12));
  CHECK(gamma_hat(s, f, fr.theta)(0, 0) == doctest::Approx(fr.objective).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_hat(s, f, Vector::Zero(2)), DimensionMismatch);
}

TEST_CASE("gamma_hat is zero for zero residuals") {
  NestedSamples s(1, 10, 2);
  for (int i = 0; i < 10; ++i) {
    s.mutable_x(i)[0] = i;
    for (double& v : s.mutable_f_inner(i)) v = 4.0;
  }
  s.update_means();
  const PolynomialFamily f(2);
  const SymMatrix g = gamma_hat(s, f, fit_linear(s, f).theta);
  CHECK(max_abs(g.matrix()) < 1e-20);
}

TEST_CASE("gamma_hat on the toy at K = 1") {
  const NestedSamples s = draw_nested(gaussian_toy(0.1), 200000, 1, {2, {1}});
  const ConstantFamily f;
  const double g = gamma_hat(s, f, fit_linear(s, f).theta)(0, 0);
  CHECK(std::abs(g - 2.0) <= 0.03 * 2.0);
}

TEST_CASE("antithetic estimators against the displayed half-sample formulas") {
  const auto f = unit_piecewise(4);
  const NestedSamples s = draw_nested(gaussian_toy(0.7), 2000, 6, {3, {1}});
  const FitResult fr = fit_linear(s, f);
  const VarianceEstimates ve = ab_antithetic(s, f, fr.theta);
  CHECK(ve.kbar == 3);
  CHECK(ve.n_used == 2000);
  Matrix a = Matrix::Zero(4, 4), b = Matrix::Zero(4, 4), g = Matrix::Zero(4, 4);
  Vector u;
  for (int i = 0; i < s.size(); ++i) {
    const auto v = s.f_inner(i);
    const double m1 = (v[0] + v[1] + v[2]) / 3, m2 = (v[3] + v[4] + v[5]) / 3, m = (m1 + m2) / 2;
    f.features(s.x(i), u);
    const double phi = fr.theta.dot(u);
    const Matrix uu = u * u.transpose();
    a += (2 * std::pow(phi - m, 2) - 0.5 * std::pow(phi - m1, 2) - 0.5 * std::pow(phi - m2, 2)) * uu;
    b += 2 * 3 * (0.5 * std::pow(phi - m1, 2) + 0.5 * std::pow(phi - m2, 2) - std::pow(phi - m, 2)) * uu;
    g += std::pow(phi - m, 2) * uu;
  }
  const double n = s.size();
  CHECK(max_abs(ve.a_anti.matrix() - a / n) <= 1e-10);
  CHECK(max_abs(ve.b_anti.matrix() - b / n) <= 1e-10);
  CHECK(max_abs(ve.gamma_hat_2k.matrix() - g / n) <= 1e-10);
}

TEST_CASE("antithetic identity and PSD B") {
  const PolynomialFamily f(2);
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const NestedSamples s = draw_nested(gaussian_toy(0.5), 3000, 8, {4, {rep}});
    const FitResult fr = fit_linear(s, f);
    const VarianceEstimates ve = ab_antithetic(s, f, fr.theta);
    const Matrix lhs = ve.a_anti.matrix() + ve.b_anti.matrix() / 8.0;
    CHECK(max_abs(lhs - ve.gamma_hat_2k.matrix()) <= 1e-10);
    CHECK(max_abs(ve.gamma_hat_2k.matrix() - gamma_hat(s, f, fr.theta).matrix()) <= 1e-12);
    const double scale = max_abs(ve.b_anti.matrix());
    CHECK(sym_eig(ve.b_anti).values.minCoeff() >= -1e-10 * scale);
  }
}

TEST_CASE("deterministic inner values give zero B") {
  NestedSamples s(1, 100, 4);
  for (int i = 0; i < 100; ++i) {
    s.mutable_x(i)[0] = 0.01 * i;
    for (double& v : s.mutable_f_inner(i)) v = std::sin(0.01 * i);
  }
  s.update_means();
  const PolynomialFamily f(1);
  const VarianceEstimates ve = ab_antithetic(s, f, fit_linear(s, f).theta);
  CHECK(max_abs(ve.b_anti.matrix()) == 0.0);
  const KEstimates k = k_estimators(ve, hessian_hat(s, f, Vector::Zero(2)), 1.0);
  CHECK(k.k_a_h == 1);
  CHECK(k.k_a_noh == 1);
  CHECK(k.k_g_h == 1);
  CHECK(k.k_g_noh == 1);
}

TEST_CASE("odd inner count is rejected") {
  const NestedSamples s = draw_nested(gaussian_toy(0.1), 10, 3, {1, {1}});
  CHECK_THROWS_AS(ab_antithetic(s, ConstantFamily{}, Vector::Ones(1)), WrongInnerCount);
}

TEST_CASE("antithetic B on the toy") {
  const NestedSamples s = draw_nested(gaussian_toy(0.1), 200000, 8, {5, {1}});
  const ConstantFamily f;
  const VarianceEstimates ve = ab_antithetic(s, f, fit_linear(s, f).theta);
  CHECK(std::abs(ve.b_anti(0, 0) - 1.9998) <= 0.05 * 1.9998);
}

TEST_CASE("scalar K estimators at the toy closed form") {
  const double rho = 0.1, r4 = std::pow(rho, 4);
  const VarianceEstimates exact = scalar_estimates(2 * r4, 2 * (1 - r4), 32);
  const KEstimates k = k_estimators(exact, scalar(1.0), 1.0);
  CHECK(k.k_a_h == 100);
  CHECK(k.k_a_noh == 100);
  CHECK(k.ratio_a_h == doctest::Approx(9999.0).epsilon(1e-12));
  CHECK(k.k_g_h == 8);
  CHECK(k.k_g_noh == 8);
  CHECK(k.ratio_g_h == doctest::Approx(2 * (1 - r4) / (2 * r4 + 2 * (1 - r4) / 64)).epsilon(1e-12));
  // q = 1 takes |Â|
  const KEstimates neg = k_estimators(scalar_estimates(-2 * r4, 2 * (1 - r4), 32), scalar(1.0), 1.0);
  CHECK(neg.k_a_h == 100);
}

TEST_CASE("zero A saturates at the cap") {
  const VarianceEstimates ve = scalar_estimates(0.0, 1.0, 4);
  const KEstimates k = k_estimators(ve, scalar(1.0), 1.0, 500);
  CHECK(k.k_a_h == 500);
  CHECK(k.k_a_noh == 500);
  CHECK(std::isinf(k.ratio_a_h));
  CHECK(k.k_g_h == nu(1.0 / (1.0 / 8.0)));
  const KEstimates huge = k_estimators(scalar_estimates(1e-30, 1.0, 4), scalar(1.0), 1.0);
  CHECK(huge.k_a_h == kDefaultKCap);
}

TEST_CASE("matrix K estimators use whitened traces and the positive part") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    // Γ̂ is PSD by construction; Â = Γ̂ − B̂/(2K̄) may be indefinite.
    Matrix mg(3, 3), mb(3, 3), mh(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        mg(i, j) = z(gen);
        mb(i, j) = z(gen);
        mh(i, j) = z(gen);
      }
    VarianceEstimates ve;
    ve.kbar = 4;
    ve.b_anti = SymMatrix(Matrix(mb * mb.transpose()));
    ve.gamma_hat_2k = SymMatrix(Matrix(mg * mg.transpose()));
    ve.a_anti = SymMatrix(Matrix(ve.gamma_hat_2k.matrix() - ve.b_anti.matrix() / 8.0));
    const SymMatrix h(Matrix(mh * mh.transpose() + Matrix::Identity(3, 3)));
    const double c = 0.7;
    const KEstimates k = k_estimators(ve, h, c, 1000000);

    const Matrix hinv = h.matrix().inverse();
    const Eigen::LLT<Matrix> llt(h.matrix());
    const Matrix linv = llt.matrixL().solve(Matrix::Identity(3, 3));
    Eigen::SelfAdjointEigenSolver<Matrix> wa(linv * ve.a_anti.matrix() * linv.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> ea(ve.a_anti.matrix());
    const double tr_b_h = (ve.b_anti.matrix() * hinv).trace();
    const double tr_a_h = wa.eigenvalues().cwiseMax(0.0).sum();
    const double tr_g_h = (ve.gamma_hat_2k.matrix() * hinv).trace();
    CHECK(k.ratio_a_h == doctest::Approx(tr_b_h / (c * tr_a_h)).epsilon(1e-9));
    CHECK(k.ratio_a_noh == doctest::Approx(ve.b_anti.trace() / (c * ea.eigenvalues().cwiseMax(0.0).sum())).epsilon(1e-9));
    CHECK(k.ratio_g_h == doctest::Approx(tr_b_h / (c * tr_g_h)).epsilon(1e-9));
    CHECK(k.ratio_g_noh == doctest::Approx(ve.b_anti.trace() / (c * ve.gamma_hat_2k.trace())).epsilon(1e-9));
    CHECK(k.k_g_h == nu(k.ratio_g_h));
    CHECK(k.k_a_h == nu(k.ratio_a_h));
  }
}

TEST_CASE("K estimators are invariant to the scale of H") {
  const PolynomialFamily f(2);
  const NestedSamples s = draw_nested(gaussian_toy(0.4), 5000, 8, {6, {1}});
  const FitResult fr = fit_linear(s, f);
  const VarianceEstimates ve = ab_antithetic(s, f, fr.theta);
  const KEstimates base = k_estimators(ve, fr.hessian_hat, 1.0);
  for (double c : {1e-3, 0.5, 2.0, 1e4}) {
    const KEstimates k = k_estimators(ve, c * fr.hessian_hat, 1.0);
    CHECK(k.k_a_h == base.k_a_h);
    CHECK(k.k_g_h == base.k_g_h);
    CHECK(k.ratio_a_h == doctest::Approx(base.ratio_a_h).epsilon(1e-9));
    CHECK(k.ratio_g_h == doctest::Approx(base.ratio_g_h).epsilon(1e-9));
    CHECK(k.k_a_noh == base.k_a_noh);
    CHECK(k.k_g_noh == base.k_g_noh);
  }
}

TEST_CASE("Gamma-based estimates do not exceed A-based ones for PSD A") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix ma(3, 3), mb(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        ma(i, j) = z(gen);
        mb(i, j) = z(gen);
      }
    VarianceEstimates ve;
    ve.kbar = 4;
    ve.a_anti = SymMatrix(Matrix(ma * ma.transpose()));
    ve.b_anti = SymMatrix(Matrix(5.0 * mb * mb.transpose()));
    ve.gamma_hat_2k = SymMatrix(Matrix(ve.a_anti.matrix() + ve.b_anti.matrix() / 8.0));
    const SymMatrix h = SymMatrix::identity(3);
    const KEstimates k = k_estimators(ve, h, 0.3);
    CHECK(k.k_g_h <= k.k_a_h);
    CHECK(k.k_g_noh <= k.k_a_noh);
  }
}

TEST_CASE("K estimators are non-increasing in the cost ratio") {
  const VarianceEstimates ve = scalar_estimates(0.01, 3.0, 4);
  KEstimates prev = k_estimators(ve, scalar(1.0), 0.01);
  for (double c = 0.02; c < 50; c *= 1.7) {
    const KEstimates k = k_estimators(ve, scalar(1.0), c);
    CHECK(k.k_a_h <= prev.k_a_h);
    CHECK(k.k_a_noh <= prev.k_a_noh);
    CHECK(k.k_g_h <= prev.k_g_h);
    CHECK(k.k_g_noh <= prev.k_g_noh);
    prev = k;
  }
}

TEST_CASE("difference estimators recover A and B from exact Gammas") {
  const SymMatrix a = scalar(0.3), b = scalar(2.0);
  const SymMatrix g3 = scalar(0.3 + 2.0 / 3), g7 = scalar(0.3 + 2.0 / 7);
  const auto [ad, bd] = ab_difference(g3, 3, g7, 7);
  CHECK(ad(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(bd(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(ab_difference(g7, 7, g3, 3), DomainError);
}

TEST_CASE("K estimators reject bad inputs") {
  const VarianceEstimates ve = scalar_estimates(1.0, 1.0, 4);
  CHECK_THROWS_AS(k_estimators(ve, scalar(1.0), 0.0), DomainError);
  CHECK_THROWS_AS(k_estimators(ve, SymMatrix::identity(2), 1.0), DimensionMismatch);
  CHECK_THROWS_AS(k_estimators(ve, scalar(-1.0), 1.0), NotPositiveDefinite);
}

}
