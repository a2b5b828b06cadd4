#include "nested_lsmc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nested_lsmc/errors.hpp"

namespace nlsmc {
namespace {

constexpr double kSymmetryTol = 1e-10;

Eigen::LLT<Matrix> cholesky_or_throw(const SymMatrix& m) {
  Eigen::LLT<Matrix> llt(m.matrix());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("Cholesky factorization hit a non-positive pivot");
  }
  // Eigen's LLT does not reject tiny pivots on semi-definite input.
  const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
    throw NotPositiveDefinite("Cholesky factorization hit a non-positive pivot");
  }
  return llt;
}

SymMatrix map_eigenvalues(const SymMatrix& m, double floor) {
  if (m.is_diagonal()) {
    Vector d = m.matrix().diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = std::max(d(i), floor);
    return SymMatrix::diagonal(d);
  }
  SymEigen e = sym_eig(m);
  for (Eigen::Index i = 0; i < e.values.size(); ++i) e.values(i) = std::max(e.values(i), floor);
  return SymMatrix(Matrix(e.vectors * e.values.asDiagonal() * e.vectors.transpose()));
}

Matrix whiten(const SymMatrix& s, const SymMatrix& h) {
  if (s.dim() != h.dim()) throw DimensionMismatch("whiten: dimension mismatch");
  const auto llt = cholesky_or_throw(h);
  const auto lower = llt.matrixL();
  Matrix tmp = lower.solve(s.matrix());                 // L⁻¹ S
  Matrix out = lower.solve(tmp.transpose()).transpose();  // L⁻¹ S L⁻ᵀ
  return out;
}

}  // namespace

SymMatrix::SymMatrix(Eigen::Index dim) : m_(Matrix::Zero(dim, dim)) {}

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("SymMatrix: matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw DomainError("SymMatrix: input is not symmetric within tolerance");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index dim) { return SymMatrix(Matrix(Matrix::Identity(dim, dim))); }

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

bool SymMatrix::is_diagonal() const {
  for (Eigen::Index j = 0; j < m_.cols(); ++j)
    for (Eigen::Index i = 0; i < m_.rows(); ++i)
      if (i != j && m_(i, j) != 0.0) return false;
  return true;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  if (other.dim() != dim()) throw DimensionMismatch("SymMatrix +=: dimension mismatch");
  m_ += other.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

Vector spd_solve(const SymMatrix& m, const Vector& rhs) {
  if (rhs.size() != m.dim()) throw DimensionMismatch("spd_solve: rhs size mismatch");
  return cholesky_or_throw(m).solve(rhs);
}

SymEigen sym_eig(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("sym_eig: QR iteration exceeded Eigen's iteration cap");
  }
  // Eigen returns ascending order.
  SymEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

SymMatrix eig_floor(const SymMatrix& m, double eps) {
  if (!(eps > 0.0)) throw DomainError("eig_floor: eps must be positive");
  return map_eigenvalues(m, eps);
}

SymMatrix positive_part(const SymMatrix& m) { return map_eigenvalues(m, 0.0); }

double trace_whitened(const SymMatrix& s, const SymMatrix& h) { return whiten(s, h).trace(); }

double trace_whitened_positive(const SymMatrix& s, const SymMatrix& h) {
  const Matrix w = whiten(s, h);
  return positive_part(SymMatrix(Matrix(0.5 * (w + w.transpose())))).trace();
}

}  // namespace nlsmc
