#include "nested_lsmc/regress.hpp"

#include <algorithm>
#include <cmath>

#include "nested_lsmc/errors.hpp"

namespace nlsmc {
namespace {

void check_theta(const ParamFamily& family, const Vector& theta) {
  if (theta.size() != family.dim_theta()) {
    throw DimensionMismatch("theta has dimension " + std::to_string(theta.size()) + ", family expects " +
                            std::to_string(family.dim_theta()));
  }
}

// φ(θ, X_i) for every sample.
std::vector<double> evaluate_all(const NestedSamples& samples, const ParamFamily& family, const Vector& theta) {
  std::vector<double> out(static_cast<std::size_t>(samples.size()));
  if (family.is_linear()) {
    const auto& lin = static_cast<const LinearFamily&>(family);
    SparseFeatures u;
    for (int i = 0; i < samples.size(); ++i) {
      lin.sparse_features(samples.x(i), u);
      double v = 0.0;
      for (std::size_t j = 0; j < u.index.size(); ++j) v += theta(u.index[j]) * u.value[j];
      out[i] = v;
    }
  } else {
    for (int i = 0; i < samples.size(); ++i) out[i] = family.eval(theta, samples.x(i));
  }
  return out;
}

double mean_square_residual(const NestedSamples& samples, const std::vector<double>& phi) {
  double acc = 0.0;
  for (int i = 0; i < samples.size(); ++i) {
    const double r = phi[i] - samples.inner_mean(i);
    acc += r * r;
  }
  return acc / samples.size();
}

// v(θ_old + Δ) − v(θ_old) from the increments dphi of φ, as a mean of
// dphi·(dphi + 2·residual) terms.
double objective_delta(const NestedSamples& samples, const std::vector<double>& dphi,
                       const std::vector<double>& phi_old) {
  double acc = 0.0;
  for (int i = 0; i < samples.size(); ++i) {
    acc += dphi[i] * (dphi[i] + 2.0 * (phi_old[i] - samples.inner_mean(i)));
  }
  return acc / samples.size();
}

FitResult finish_linear(const NestedSamples& samples, const LinearFamily& family, Vector theta, SymMatrix gram,
                        FitMethod method) {
  FitResult r;
  r.objective = mean_square_residual(samples, evaluate_all(samples, family, theta));
  r.theta = std::move(theta);
  r.hessian_hat = std::move(gram);
  r.method = method;
  return r;
}

}  // namespace

NestedSamples::NestedSamples(int dim_x, int n, int k) : d_(dim_x), n_(n), k_(k) {
  if (dim_x < 1 || n < 1 || k < 1) throw DomainError("NestedSamples: dimensions must be positive");
  x_.assign(static_cast<std::size_t>(n) * d_, 0.0);
  f_.assign(static_cast<std::size_t>(n) * k_, 0.0);
  mean_.assign(static_cast<std::size_t>(n), 0.0);
}

void NestedSamples::update_means() {
  for (int i = 0; i < n_; ++i) {
    const auto f = f_inner(i);
    double s = 0.0;
    for (double v : f) s += v;
    mean_[i] = s / k_;
  }
}

NestedSamples NestedSamples::prefix_inner(int k) const {
  if (k < 1 || k > k_) throw WrongInnerCount("prefix_inner: requested " + std::to_string(k) + " of " + std::to_string(k_));
  NestedSamples out(d_, n_, k);
  out.x_ = x_;
  for (int i = 0; i < n_; ++i) {
    const auto src = f_inner(i);
    std::copy(src.begin(), src.begin() + k, out.mutable_f_inner(i).begin());
  }
  out.update_means();
  return out;
}

NestedSamples NestedSamples::head(int n) const {
  if (n < 1 || n > n_) throw DomainError("head: bad sample count");
  NestedSamples out(d_, n, k_);
  std::copy(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n) * d_, out.x_.begin());
  std::copy(f_.begin(), f_.begin() + static_cast<std::ptrdiff_t>(n) * k_, out.f_.begin());
  std::copy(mean_.begin(), mean_.begin() + n, out.mean_.begin());
  return out;
}

std::vector<double> NestedSamples::first_coordinates() const {
  std::vector<double> out(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) out[i] = x_[static_cast<std::size_t>(i) * d_];
  return out;
}

NestedSamples draw_nested(const ConditionalModel& model, int n, int k, const SeedSpec& base) {
  if (n < 1 || k < 1) throw DomainError("draw_nested: N and K must be positive");
  if (base.stream_path.size() + 2 > kMaxStreamPath) throw DomainError("draw_nested: base stream path too long");
  NestedSamples out(model.dim_x, n, k);
  std::uint64_t path[kMaxStreamPath] = {};
  const std::size_t depth = base.stream_path.size();
  std::copy(base.stream_path.begin(), base.stream_path.end(), path);
  const auto stream_for = [&](std::uint64_t i, std::uint64_t j) {
    path[depth] = i;
    path[depth + 1] = j;
    return UniformStream(base.master_seed, std::span<const std::uint64_t>(path, depth + 2));
  };
  for (int i = 0; i < n; ++i) {
    UniformStream outer = stream_for(static_cast<std::uint64_t>(i), 0);
    model.sample_x(outer, out.mutable_x(i));
    const Point xi = out.x(i);
    auto f = out.mutable_f_inner(i);
    for (int j = 0; j < k; ++j) {
      UniformStream inner = stream_for(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j) + 1);
      f[j] = model.sample_f_given_x(xi, inner);
    }
  }
  out.update_means();
  return out;
}

double objective(const NestedSamples& samples, const ParamFamily& family, const Vector& theta) {
  check_theta(family, theta);
  return mean_square_residual(samples, evaluate_all(samples, family, theta));
}

std::string to_string(FitMethod m) {
  switch (m) {
    case FitMethod::closed_form: return "closed";
    case FitMethod::regularized: return "regularized";
    case FitMethod::gradient_descent: return "descent";
  }
  return "unknown";
}

FitMethod parse_fit_method(const std::string& name) {
  if (name == "closed") return FitMethod::closed_form;
  if (name == "regularized") return FitMethod::regularized;
  if (name == "descent") return FitMethod::gradient_descent;
  throw DomainError("unknown fit method '" + name + "'");
}

NormalEquations normal_equations(const NestedSamples& samples, const LinearFamily& family) {
  const int q = family.dim_theta();
  Matrix gram = Matrix::Zero(q, q);
  Vector rhs = Vector::Zero(q);
  SparseFeatures u;
  for (int i = 0; i < samples.size(); ++i) {
    family.sparse_features(samples.x(i), u);
    const double m = samples.inner_mean(i);
    for (std::size_t a = 0; a < u.index.size(); ++a) {
      rhs(u.index[a]) += m * u.value[a];
      for (std::size_t b = 0; b < u.index.size(); ++b) gram(u.index[a], u.index[b]) += u.value[a] * u.value[b];
    }
  }
  const double inv_n = 1.0 / samples.size();
  return {SymMatrix(Matrix(gram * inv_n)), rhs * inv_n};
}

FitResult fit_linear(const NestedSamples& samples, const LinearFamily& family) {
  NormalEquations ne = normal_equations(samples, family);
  Vector theta;
  try {
    theta = spd_solve(ne.gram, ne.rhs);
  } catch (const NotPositiveDefinite&) {
    throw SingularGram("fit_linear: Gram matrix is not positive definite");
  }
  return finish_linear(samples, family, std::move(theta), std::move(ne.gram), FitMethod::closed_form);
}

FitResult fit_linear_regularized(const NestedSamples& samples, const LinearFamily& family, double eps) {
  if (!(eps > 0.0)) throw DomainError("fit_linear_regularized: eps must be positive");
  NormalEquations ne = normal_equations(samples, family);
  const SymMatrix floored = eig_floor(2.0 * ne.gram, eps);
  Vector theta = 2.0 * spd_solve(floored, ne.rhs);
  return finish_linear(samples, family, std::move(theta), std::move(ne.gram), FitMethod::regularized);
}

Vector objective_gradient(const NestedSamples& samples, const ParamFamily& family, const Vector& theta) {
  check_theta(family, theta);
  const std::vector<double> phi = evaluate_all(samples, family, theta);
  Vector g = Vector::Zero(family.dim_theta());
  Vector grad_phi;
  for (int i = 0; i < samples.size(); ++i) {
    family.grad(theta, samples.x(i), grad_phi);
    g += (phi[i] - samples.inner_mean(i)) * grad_phi;
  }
  return g * (2.0 / samples.size());
}

FitResult fit_descent(const NestedSamples& samples, const ParamFamily& family, const Vector& init, double tol,
                      int max_iter) {
  check_theta(family, init);
  if (!(tol > 0.0)) throw DomainError("fit_descent: tol must be positive");
  constexpr double kArmijo = 0.5;
  Vector theta = init;
  std::vector<double> phi = evaluate_all(samples, family, theta);
  double step = 1.0;
  FitResult r;
  r.method = FitMethod::gradient_descent;
  r.converged = false;
  int iter = 0;
  for (;; ++iter) {
    const Vector g = objective_gradient(samples, family, theta);
    if (g.lpNorm<Eigen::Infinity>() <= tol) {
      r.converged = true;
      break;
    }
    if (iter >= max_iter) break;
    const double g2 = g.squaredNorm();
    double t = step;
    bool accepted = false;
    Vector candidate;
    std::vector<double> phi_candidate, dphi(phi.size());
    for (int bt = 0; bt < 200; ++bt) {
      candidate = theta - t * g;
      phi_candidate = evaluate_all(samples, family, candidate);
      // For linear φ the increment is φ(−t·g) itself; subtracting two
      // evaluations would lose it near the optimum.
      if (family.is_linear()) {
        dphi = evaluate_all(samples, family, Vector(-t * g));
      } else {
        for (std::size_t i = 0; i < dphi.size(); ++i) dphi[i] = phi_candidate[i] - phi[i];
      }
      if (objective_delta(samples, dphi, phi) <= -kArmijo * t * g2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent representable in floating point
    theta = std::move(candidate);
    phi = std::move(phi_candidate);
    step = 2.0 * t;
  }
  r.iterations = iter;
  r.objective = mean_square_residual(samples, phi);
  r.hessian_hat = hessian_hat(samples, family, theta);
  r.theta = std::move(theta);
  return r;
}

FitResult fit(const NestedSamples& samples, const LinearFamily& family, const FitConfig& cfg) {
  switch (cfg.method) {
    case FitMethod::closed_form: return fit_linear(samples, family);
    case FitMethod::regularized: return fit_linear_regularized(samples, family, cfg.eps);
    case FitMethod::gradient_descent:
      return fit_descent(samples, family, Vector::Zero(family.dim_theta()), cfg.tol, cfg.max_iter);
  }
  throw DomainError("unknown fit method");
}

SymMatrix hessian_hat(const NestedSamples& samples, const ParamFamily& family, const Vector& theta) {
  check_theta(family, theta);
  if (family.is_linear()) return normal_equations(samples, static_cast<const LinearFamily&>(family)).gram;
  const int q = family.dim_theta();
  Matrix h = Matrix::Zero(q, q);
  Vector grad_phi;
  Matrix hess_phi;
  for (int i = 0; i < samples.size(); ++i) {
    const Point x = samples.x(i);
    family.grad(theta, x, grad_phi);
    family.hess(theta, x, hess_phi);
    const double resid = family.eval(theta, x) - samples.inner_mean(i);
    h.noalias() += grad_phi * grad_phi.transpose();
    h += resid * hess_phi;
  }
  h /= samples.size();
  return SymMatrix(Matrix(0.5 * (h + h.transpose())));
}

}  // namespace nlsmc
