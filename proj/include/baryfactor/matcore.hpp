#pragma once

#include <string_view>

#include "baryfactor/common.hpp"

/// Dense symmetric-matrix kernel: eigendecomposition, principal square
/// roots, Kronecker products and column-major vectorization.
namespace baryfactor::matcore {

/// Real symmetric d x d matrix (d >= 1).
///
/// The checked constructor rejects inputs whose asymmetry exceeds 1e-12 in
/// absolute value and then stores the exactly symmetric part.  Products such
/// as A*S*A are only symmetric up to rounding; use `symmetrized` for those.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  /// (m + m^T) / 2 without the symmetry check.
  static SymMatrix symmetrized(const Matrix& m);
  static SymMatrix identity(Eigen::Index d);
  static SymMatrix scaled_identity(Eigen::Index d, double s);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator*=(double s);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

 private:
  struct Unchecked {};
  SymMatrix(Matrix m, Unchecked) : m_(std::move(m)) {}
  Matrix m_;
};

/// Orthonormal eigenvectors (columns of `vectors`) and eigenvalues sorted in
/// descending order.
struct EigenPair {
  Matrix vectors;
  Vector values;
};

EigenPair sym_eig(const SymMatrix& s, std::string_view name = "matrix");

/// Principal square root of a positive semidefinite matrix.  Eigenvalues in
/// [-1e-10 * max(1, lambda_max), 0) are clamped to zero; anything more
/// negative raises NumericalError.
SymMatrix sqrtm_psd(const SymMatrix& s, std::string_view name = "matrix");

/// Inverse principal square root; requires positive definiteness.
SymMatrix inv_sqrtm_pd(const SymMatrix& s, std::string_view name = "matrix");

/// True when the smallest eigenvalue exceeds `rel_tol` times the largest one
/// (and is positive).
bool is_positive_definite(const SymMatrix& s, double rel_tol = 1e-14);

Matrix kron(const Matrix& a, const Matrix& b);

/// Column-major stacking: vec(A X B) = (B^T kron A) vec(X).
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace baryfactor::matcore
