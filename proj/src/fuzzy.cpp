#include <cmath>

#include "baryfactor/cluster.hpp"
#include "cluster_internal.hpp"

namespace baryfactor::cluster {

namespace {

Matrix sq_dists_to(const Matrix& data, const Matrix& means) {
  Matrix d2(data.rows(), means.rows());
  for (Eigen::Index k = 0; k < means.rows(); ++k) {
    d2.col(k) = (data.rowwise() - means.row(k)).rowwise().squaredNorm();
  }
  return d2;
}

void check_exponent(double c) {
  if (!(c > 1.0)) throw InvalidArgument("fuzzy exponent c must be greater than 1");
}

}  // namespace

Matrix fuzzy_memberships(const Matrix& data, const Matrix& means, double c) {
  check_exponent(c);
  if (means.cols() != data.cols()) throw InvalidArgument("fuzzy_memberships: dimension mismatch");
  const Matrix d2 = sq_dists_to(data, means);
  const double power = -1.0 / (c - 1.0);
  Matrix u(d2.rows(), d2.cols());
  for (Eigen::Index i = 0; i < d2.rows(); ++i) {
    Eigen::Index hit = -1;
    for (Eigen::Index k = 0; k < d2.cols() && hit < 0; ++k) {
      if (d2(i, k) == 0.0) hit = k;
    }
    if (hit >= 0) {
      u.row(i).setZero();
      u(i, hit) = 1.0;
      continue;
    }
    // u_ik proportional to (d2_ik)^(-1/(c-1)), evaluated in the log domain.
    Eigen::RowVectorXd logs = power * d2.row(i).array().log();
    logs.array() -= logs.maxCoeff();
    u.row(i) = logs.array().exp();
    u.row(i) /= u.row(i).sum();
  }
  return u;
}

double fuzzy_objective(const Matrix& data, const Matrix& memberships, const Matrix& means,
                       double c) {
  check_exponent(c);
  return (memberships.array().pow(c) * sq_dists_to(data, means).array()).sum();
}

SoftResult fuzzy_from_means(const Matrix& data, const Matrix& means, double c,
                            const ClusterConfig& cfg) {
  check_exponent(c);
  detail::check_problem(data, static_cast<int>(means.rows()));
  if (cfg.max_iters < 1) throw InvalidArgument("fuzzy k-means needs at least one iteration");
  SoftResult res;
  Matrix m = means;
  Matrix u;
  for (res.iterations = 0; res.iterations < cfg.max_iters; ++res.iterations) {
    u = fuzzy_memberships(data, m, c);
    res.trace.push_back(fuzzy_objective(data, u, m, c));
    const Matrix w = u.array().pow(c);
    const Vector mass = w.colwise().sum().transpose();
    m = (w.transpose() * data).array().colwise() / mass.array();
    const std::size_t t = res.trace.size();
    if (t >= 2 && std::abs(res.trace[t - 2] - res.trace[t - 1]) <=
                      cfg.tol * std::max(std::abs(res.trace[t - 2]), 1e-300)) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  res.assignment = std::move(u);
  res.objective = res.trace.back();
  return res;
}

SoftResult fuzzy_kmeans(const Matrix& data, int k, double c, const ClusterConfig& cfg) {
  detail::check_problem(data, k);
  return detail::best_of<SoftResult>(cfg.restarts, cfg.threads, [&](int r) {
    return fuzzy_from_means(data, init_means(data, k, cfg.seed + static_cast<std::uint64_t>(r)),
                            c, cfg);
  });
}

}  // namespace baryfactor::cluster
