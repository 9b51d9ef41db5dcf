#include "baryfactor/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

namespace baryfactor::matcore {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdClampTol = 1e-10;

std::string describe(std::string_view name, const char* what) {
  std::ostringstream os;
  os << name << ": " << what;
  return os.str();
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InvalidArgument("SymMatrix: expected a non-empty square matrix");
  }
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kSymmetryTol)) {
    std::ostringstream os;
    os << "SymMatrix: input is not symmetric (max |m - m^T| = " << asym << ")";
    throw InvalidArgument(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::symmetrized(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InvalidArgument("SymMatrix: expected a non-empty square matrix");
  }
  return SymMatrix(Matrix(0.5 * (m + m.transpose())), Unchecked{});
}

SymMatrix SymMatrix::identity(Eigen::Index d) { return scaled_identity(d, 1.0); }

SymMatrix SymMatrix::scaled_identity(Eigen::Index d, double s) {
  if (d < 1) throw InvalidArgument("SymMatrix: dimension must be >= 1");
  return SymMatrix(Matrix(s * Matrix::Identity(d, d)), Unchecked{});
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.dim() != dim()) throw InvalidArgument("SymMatrix: dimension mismatch");
  m_ += o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

EigenPair sym_eig(const SymMatrix& s, std::string_view name) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError(describe(name, "symmetric eigensolver did not converge"));
  }
  // Eigen sorts ascending; flip to descending.
  const Eigen::Index d = s.dim();
  EigenPair out{Matrix(d, d), Vector(d)};
  for (Eigen::Index j = 0; j < d; ++j) {
    out.values(j) = solver.eigenvalues()(d - 1 - j);
    out.vectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  return out;
}

SymMatrix sqrtm_psd(const SymMatrix& s, std::string_view name) {
  EigenPair e = sym_eig(s, name);
  const double tol = kPsdClampTol * std::max(1.0, std::abs(e.values(0)));
  for (Eigen::Index j = 0; j < e.values.size(); ++j) {
    double& v = e.values(j);
    if (v < -tol) {
      std::ostringstream os;
      os << name << ": not PSD (eigenvalue " << v << ")";
      throw NumericalError(os.str());
    }
    v = std::sqrt(std::max(v, 0.0));
  }
  return SymMatrix::symmetrized(e.vectors * e.values.asDiagonal() * e.vectors.transpose());
}

SymMatrix inv_sqrtm_pd(const SymMatrix& s, std::string_view name) {
  EigenPair e = sym_eig(s, name);
  const double lo = e.values(e.values.size() - 1);
  if (!(lo > 0.0) || lo <= 1e-14 * e.values(0)) {
    throw NumericalError(describe(name, "not positive definite; cannot invert square root"));
  }
  const Vector inv = e.values.cwiseSqrt().cwiseInverse();
  return SymMatrix::symmetrized(e.vectors * inv.asDiagonal() * e.vectors.transpose());
}

bool is_positive_definite(const SymMatrix& s, double rel_tol) {
  const Vector v = sym_eig(s).values;
  const double lo = v(v.size() - 1);
  return lo > 0.0 && lo > rel_tol * v(0);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

Vector vec(const Matrix& m) {
  // Eigen storage is column-major, so a flat view is exactly vec().
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 0 || cols < 0 || v.size() != rows * cols) {
    std::ostringstream os;
    os << "unvec: length " << v.size() << " does not match " << rows << "x" << cols;
    throw InvalidArgument(os.str());
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace baryfactor::matcore
