#pragma once

#include <Eigen/Dense>

namespace nlsmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix. The constructor symmetrizes its input as
/// (m + mᵀ)/2 after checking asymmetry is within 1e-10 (relative to the
/// largest entry), so entries(i,j) == entries(j,i) holds exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Eigen::Index dim);
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Eigen::Index dim);
  static SymMatrix diagonal(const Vector& d);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }
  bool is_diagonal() const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator*=(double s);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

 private:
  Matrix m_;
};

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, vectors.col(l) pairs with values(l)
};

/// Solve m·x = rhs by Cholesky. Throws NotPositiveDefinite on a non-positive pivot.
Vector spd_solve(const SymMatrix& m, const Vector& rhs);

/// Symmetric eigendecomposition, eigenvalues sorted in descending order.
/// Throws NoConvergence if the QR iteration does not converge.
SymEigen sym_eig(const SymMatrix& m);

/// S ∨ εI: same eigenvectors, eigenvalues max(λ, eps).
SymMatrix eig_floor(const SymMatrix& m, double eps);

/// Same eigenvectors, eigenvalues max(λ, 0).
SymMatrix positive_part(const SymMatrix& m);

/// tr(S·H⁻¹) for symmetric S and positive definite H, computed as
/// tr(L⁻¹ S L⁻ᵀ) with H = LLᵀ.
double trace_whitened(const SymMatrix& s, const SymMatrix& h);

/// tr((S·H⁻¹)₊), defined as tr(positive_part(L⁻¹ S L⁻ᵀ)) with H = LLᵀ.
/// The whitened matrix is similar to S·H⁻¹, so the two agree whenever S is PSD.
double trace_whitened_positive(const SymMatrix& s, const SymMatrix& h);

}  // namespace nlsmc
