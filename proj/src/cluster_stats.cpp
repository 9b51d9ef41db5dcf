#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "baryfactor/cluster.hpp"
#include "baryfactor/rng.hpp"

namespace baryfactor::cluster {

using matcore::SymMatrix;

namespace {

constexpr double kEmptyMass = 1e-12;

void check_data(const Matrix& data) {
  if (data.rows() < 1 || data.cols() < 1) throw InvalidArgument("data set is empty");
  if (!data.allFinite()) throw InvalidArgument("data set contains non-finite values");
}

}  // namespace

Regularizers resolve_regularizers(const Matrix& data, const ClusterConfig& cfg) {
  check_data(data);
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const double total_var = (data.rowwise() - mean).squaredNorm() / static_cast<double>(data.rows());
  const double d = static_cast<double>(data.cols());
  Regularizers r;
  r.eps_cov = cfg.eps_cov.value_or(total_var > 0.0 ? 1e-8 * total_var / d : 1e-12);
  r.eps_sigma = cfg.eps_sigma.value_or(total_var > 0.0 ? 1e-6 * std::sqrt(total_var) : 1e-12);
  return r;
}

ClusterStats cluster_stats(const Matrix& data, const Matrix& assignment, double eps_cov) {
  check_data(data);
  if (assignment.rows() != data.rows() || assignment.cols() < 1) {
    throw InvalidArgument("cluster_stats: assignment must be N x K with N = number of samples");
  }
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  const Eigen::Index k_count = assignment.cols();

  ClusterStats out;
  out.clusters.reserve(static_cast<std::size_t>(k_count));
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto w = assignment.col(k);
    const double mass = w.sum();
    GaussianCluster c;
    if (!(mass > kEmptyMass)) {
      out.empty.push_back(static_cast<int>(k));
      c.weight = 0.0;
      c.mean = Vector::Zero(d);
      c.cov = SymMatrix::scaled_identity(d, eps_cov > 0.0 ? eps_cov : 1.0);
      out.clusters.push_back(std::move(c));
      continue;
    }
    c.weight = mass / static_cast<double>(n);
    c.mean = (data.transpose() * w) / mass;
    const Matrix centered = data.rowwise() - c.mean.transpose();
    Matrix scatter = centered.transpose() * w.asDiagonal() * centered;
    scatter /= mass;
    scatter.diagonal().array() += eps_cov;
    c.cov = SymMatrix::symmetrized(scatter);
    out.clusters.push_back(std::move(c));
  }
  return out;
}

ClusterStats cluster_stats(const Matrix& data, const Labels& labels, int k, double eps_cov) {
  return cluster_stats(data, one_hot(labels, k), eps_cov);
}

double objective(const ClusterStats& stats, Mode mode) {
  if (!stats.empty.empty()) throw InvalidArgument("objective: re-seed empty clusters first");
  if (mode == Mode::kIsotropic) {
    double s = 0.0;
    for (const auto& c : stats.clusters) s += c.weight * c.std_dev();
    return s;
  }
  std::vector<double> w;
  std::vector<SymMatrix> covs;
  for (const auto& c : stats.clusters) {
    w.push_back(c.weight);
    covs.push_back(c.cov);
  }
  return gaussbary::solve_barycenter_covariance(w, covs).cov.trace();
}

Vector project_simplex(const Vector& v) {
  // Sort-based projection: find the largest rho with u_rho > (sum_{j<=rho} u_j - 1) / rho.
  const Eigen::Index k = v.size();
  if (k < 1) throw InvalidArgument("project_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

Matrix project_rows_simplex(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out.row(i) = project_simplex(m.row(i).transpose()).transpose();
  }
  return out;
}

void check_assignment(const Matrix& assignment, double tol) {
  for (Eigen::Index i = 0; i < assignment.rows(); ++i) {
    const auto row = assignment.row(i);
    if (row.minCoeff() < -tol || std::abs(row.sum() - 1.0) > tol) {
      std::ostringstream os;
      os << "assignment row " << i << " is not in the probability simplex";
      throw InvalidArgument(os.str());
    }
  }
}

Matrix one_hot(const Labels& labels, int k) {
  if (k < 1) throw InvalidArgument("one_hot: k must be positive");
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      std::ostringstream os;
      os << "label " << labels[i] << " at row " << i << " is outside [0, " << k << ")";
      throw InvalidArgument(os.str());
    }
    p(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return p;
}

Labels argmax_labels(const Matrix& assignment) {
  Labels out(static_cast<std::size_t>(assignment.rows()));
  for (Eigen::Index i = 0; i < assignment.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < assignment.cols(); ++k) {
      if (assignment(i, k) > assignment(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Labels argmin_labels(const Matrix& scores) {
  Labels out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) < scores(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Matrix init_means(const Matrix& data, int k, std::uint64_t seed) {
  check_data(data);
  if (k < 1 || k > data.rows()) throw InvalidArgument("init_means: need 1 <= K <= N");
  Rng rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Matrix means(k, data.cols());
  for (int j = 0; j < k; ++j) {
    const auto pick = static_cast<std::size_t>(j) + rng.index(idx.size() - static_cast<std::size_t>(j));
    std::swap(idx[static_cast<std::size_t>(j)], idx[pick]);
    means.row(j) = data.row(idx[static_cast<std::size_t>(j)]);
  }
  return means;
}

Labels nearest_mean_labels(const Matrix& data, const Matrix& means) {
  if (means.cols() != data.cols()) throw InvalidArgument("nearest_mean_labels: dimension mismatch");
  Matrix d2(data.rows(), means.rows());
  for (Eigen::Index k = 0; k < means.rows(); ++k) {
    d2.col(k) = (data.rowwise() - means.row(k)).rowwise().squaredNorm();
  }
  return argmin_labels(d2);
}

}  // namespace baryfactor::cluster
