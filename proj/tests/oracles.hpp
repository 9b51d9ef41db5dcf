#pragma once

// Independent reference computations used only by the tests.  None of them
// calls into the library's numerical code.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(std::mt19937_64& gen, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(gen);
  return m;
}

inline Matrix random_spd(std::mt19937_64& gen, int d, double floor = 0.1) {
  const Matrix a = random_matrix(gen, d, d);
  return a * a.transpose() / d + floor * Matrix::Identity(d, d);
}

inline Matrix random_symmetric(std::mt19937_64& gen, int d) {
  const Matrix a = random_matrix(gen, d, d);
  return 0.5 * (a + a.transpose());
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

// Principal square root by Eigen's Schur-based matrix function.
inline Matrix sqrtm(const Matrix& s) {
  Matrix r = s.sqrt();
  return 0.5 * (r + r.transpose());
}

// Plain fixed-point map S <- sum_k P_k (S^1/2 Sigma_k S^1/2)^1/2, iterated
// to stagnation.  Weights need not sum to one.
inline Matrix barycenter_cov(const std::vector<double>& w, const std::vector<Matrix>& covs) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  Matrix s = Matrix::Zero(covs[0].rows(), covs[0].cols());
  for (std::size_t k = 0; k < covs.size(); ++k) s += w[k] / total * covs[k];
  for (int it = 0; it < 20000; ++it) {
    const Matrix r = sqrtm(s);
    Matrix next = Matrix::Zero(s.rows(), s.cols());
    for (std::size_t k = 0; k < covs.size(); ++k) next += w[k] * sqrtm(r * covs[k] * r);
    next = 0.5 * (next + next.transpose());
    const double change = (next - s).norm() / s.norm();
    s = next;
    if (change < 1e-15) break;
  }
  return s;
}

struct Moments {
  std::vector<double> weight;
  std::vector<Vector> mean;
  std::vector<Matrix> cov;
};

// Weighted means and covariances by explicit loops.
inline Moments weighted_moments(const Matrix& x, const Matrix& p, double eps_cov) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  Moments m;
  for (int k = 0; k < p.cols(); ++k) {
    double mass = 0.0;
    Vector mu = Vector::Zero(d);
    for (int i = 0; i < n; ++i) {
      mass += p(i, k);
      for (int a = 0; a < d; ++a) mu(a) += p(i, k) * x(i, a);
    }
    mu /= mass;
    Matrix c = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) c(a, b) += p(i, k) * (x(i, a) - mu(a)) * (x(i, b) - mu(b));
    c /= mass;
    for (int a = 0; a < d; ++a) c(a, a) += eps_cov;
    m.weight.push_back(mass / n);
    m.mean.push_back(mu);
    m.cov.push_back(c);
  }
  return m;
}

// Tr[Sigma_y] as a function of an arbitrary nonnegative P (rows need not
// sum to one), used for finite differences.
inline double trace_objective(const Matrix& x, const Matrix& p, double eps_cov) {
  const Moments m = weighted_moments(x, p, eps_cov);
  return barycenter_cov(m.weight, m.cov).trace();
}

// sum_k P_k sqrt(Tr Sigma_k) for an arbitrary nonnegative P.
inline double iso_objective(const Matrix& x, const Matrix& p) {
  const Moments m = weighted_moments(x, p, 0.0);
  double s = 0.0;
  for (std::size_t k = 0; k < m.cov.size(); ++k) s += m.weight[k] * std::sqrt(m.cov[k].trace());
  return s;
}

// sigma_y through pairwise distances:
//   sigma_k = sqrt(sum_{j,l} P_jk P_lk D_jl / (2 m_k^2)),  m_k = sum_j P_jk,
//   sigma_y = (1/N) sum_k m_k sigma_k.
inline double pairwise_objective(const Matrix& d2, const Matrix& p) {
  const double n = static_cast<double>(p.rows());
  double s = 0.0;
  for (int k = 0; k < p.cols(); ++k) {
    double scatter = 0.0;
    for (int j = 0; j < p.rows(); ++j)
      for (int l = 0; l < p.rows(); ++l) scatter += p(j, k) * p(l, k) * d2(j, l);
    s += std::sqrt(scatter / 2.0) / n;
  }
  return s;
}

// Central differences of f over every entry of P.
template <class F>
Matrix fd_gradient(const Matrix& p, F f, double h) {
  Matrix g(p.rows(), p.cols());
  for (int i = 0; i < p.rows(); ++i) {
    for (int k = 0; k < p.cols(); ++k) {
      Matrix a = p, b = p;
      a(i, k) += h;
      b(i, k) -= h;
      g(i, k) = (f(a) - f(b)) / (2.0 * h);
    }
  }
  return g;
}

// Euclidean projection onto the simplex by enumerating active sets: for a
// support S the KKT point is v_S - theta with theta fixing the sum; the
// feasible candidate closest to v is the projection.
inline Vector simplex_qp(const Vector& v) {
  const int k = static_cast<int>(v.size());
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << k); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < k; ++j)
      if (mask & (1 << j)) {
        sum += v(j);
        ++count;
      }
    const double theta = (sum - 1.0) / count;
    Vector x = Vector::Zero(k);
    bool ok = true;
    for (int j = 0; j < k; ++j)
      if (mask & (1 << j)) {
        x(j) = v(j) - theta;
        if (x(j) < -1e-15) ok = false;
      }
    if (!ok) continue;
    const double dist = (x - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x.cwiseMax(0.0);
    }
  }
  return best;
}

// Correctness rate by trying every relabeling of the predicted labels.
inline double brute_correctness(const std::vector<int>& truth, const std::vector<int>& pred, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double hits = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (truth[i] == perm[static_cast<std::size_t>(pred[i])]) hits += 1.0;
    best = std::max(best, hits / static_cast<double>(truth.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double brute_soft_correctness(const std::vector<int>& truth, const Matrix& p) {
  const int k = static_cast<int>(p.cols());
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      s += p(static_cast<Eigen::Index>(i), perm[static_cast<std::size_t>(truth[i])]);
    best = std::max(best, s / static_cast<double>(truth.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double sse_of(const Matrix& x, const std::vector<int>& labels, int k) {
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    Vector mu = Vector::Zero(x.cols());
    int count = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) {
        mu += x.row(static_cast<Eigen::Index>(i)).transpose();
        ++count;
      }
    if (count == 0) continue;
    mu /= count;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) total += (x.row(static_cast<Eigen::Index>(i)).transpose() - mu).squaredNorm();
  }
  return total;
}

// Smallest SSE over every two-class labeling with both classes nonempty.
inline double best_two_means_sse(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = (mask >> i) & 1;
    best = std::min(best, sse_of(x, labels, 2));
  }
  return best;
}

// Bayes weights and conditional std at z computed directly (no log domain).
inline double conditional_std(const Matrix& x, const Vector& zbar, double eps2, double z) {
  Vector w(zbar.size());
  for (int i = 0; i < zbar.size(); ++i) w(i) = std::exp(-(z - zbar(i)) * (z - zbar(i)) / (2 * eps2));
  w /= w.sum();
  const Vector mean = x.transpose() * w;
  double var = 0.0;
  for (int i = 0; i < x.rows(); ++i) var += w(i) * (x.row(i).transpose() - mean).squaredNorm();
  return std::sqrt(var);
}

// Trapezoid rule for int sigma(z) nu(z) dz on a fine grid, from the direct
// conditional std and mixture density.
inline double sigma_integral(const Matrix& x, const Vector& zbar, double alpha) {
  const double n = static_cast<double>(zbar.size());
  const double eps2 = alpha * alpha * zbar.squaredNorm() / n;
  const double eps = std::sqrt(eps2);
  const double lo = zbar.minCoeff() - 8.0 * eps;
  const double hi = zbar.maxCoeff() + 8.0 * eps;
  const int nodes = 20001;
  const double h = (hi - lo) / (nodes - 1);
  double total = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double z = lo + h * j;
    double density = 0.0;
    for (int i = 0; i < zbar.size(); ++i)
      density += std::exp(-(z - zbar(i)) * (z - zbar(i)) / (2 * eps2)) / std::sqrt(2 * std::numbers::pi * eps2) / n;
    const double w = (j == 0 || j == nodes - 1) ? 0.5 : 1.0;
    total += w * density * conditional_std(x, zbar, eps2, z);
  }
  return total * h;
}

inline Vector sigma_fd(const Matrix& x, const Vector& zbar, double alpha, double h) {
  Vector g(zbar.size());
  for (int i = 0; i < zbar.size(); ++i) {
    Vector a = zbar, b = zbar;
    a(i) += h;
    b(i) -= h;
    g(i) = (sigma_integral(x, a, alpha) - sigma_integral(x, b, alpha)) / (2 * h);
  }
  return g;
}

inline double cosine(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).sum() / (a.norm() * b.norm());
}

// Removes the per-row mean (projection onto the tangent space of the
// product of simplices).
inline Matrix row_centered(const Matrix& g) { return g.colwise() - g.rowwise().mean(); }

}  // namespace oracle
