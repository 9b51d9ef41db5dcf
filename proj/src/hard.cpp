#include <cmath>
#include <limits>

#include "baryfactor/cluster.hpp"
#include "cluster_internal.hpp"

namespace baryfactor::cluster {

using matcore::SymMatrix;

namespace detail {

bool reseed_empty(const Matrix& data, Labels& labels, int k) {
  for (int guard = 0; guard <= k; ++guard) {
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    int empty = -1;
    for (int j = 0; j < k && empty < 0; ++j) {
      if (counts[static_cast<std::size_t>(j)] == 0) empty = j;
    }
    if (empty < 0) return true;

    Matrix means = Matrix::Zero(k, data.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      means.row(labels[i]) += data.row(static_cast<Eigen::Index>(i));
    }
    double far = -1.0;
    std::size_t far_i = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto l = static_cast<std::size_t>(labels[i]);
      if (counts[l] < 2) continue;
      const double d2 = (data.row(static_cast<Eigen::Index>(i)) -
                         means.row(labels[i]) / static_cast<double>(counts[l]))
                            .squaredNorm();
      if (d2 > far) {
        far = d2;
        far_i = i;
      }
    }
    if (far <= 0.0) return false;
    labels[far_i] = empty;
  }
  return false;
}

}  // namespace detail

namespace {

ClusterStats label_stats(const Matrix& data, Labels& labels, int k, double eps_cov) {
  if (!detail::reseed_empty(data, labels, k)) {
    throw InvalidArgument("hard clustering: fewer distinct samples than clusters");
  }
  return cluster_stats(data, labels, k, eps_cov);
}

void blend(ClusterStats& prev, const ClusterStats& next, double c) {
  if (c >= 1.0) {
    prev = next;
    return;
  }
  for (std::size_t j = 0; j < prev.clusters.size(); ++j) {
    auto& a = prev.clusters[j];
    const auto& b = next.clusters[j];
    a.weight = (1.0 - c) * a.weight + c * b.weight;
    a.mean = (1.0 - c) * a.mean + c * b.mean;
    a.cov = (1.0 - c) * a.cov + c * b.cov;
  }
}

ClusterStats standardized(ClusterStats stats) {
  const auto k = static_cast<double>(stats.clusters.size());
  const auto d = stats.clusters.front().mean.size();
  double trace = 0.0;
  for (const auto& c : stats.clusters) trace += c.cov.trace();
  const SymMatrix shared = SymMatrix::scaled_identity(d, trace / (k * static_cast<double>(d)));
  for (auto& c : stats.clusters) {
    c.weight = 1.0 / k;
    c.cov = shared;
  }
  return stats;
}

Matrix assignment_scores(const Matrix& data, const ClusterStats& stats, Mode mode,
                         double eps_sigma) {
  if (mode == Mode::kGeneral) return general_gradient(data, stats).grad;
  return grad_isotropic(stats, data, eps_sigma);
}

Matrix label_means(const Matrix& data, const Labels& labels, int k) {
  Matrix means = Matrix::Zero(k, data.cols());
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    means.row(labels[i]) += data.row(static_cast<Eigen::Index>(i));
    counts[static_cast<std::size_t>(labels[i])] += 1.0;
  }
  for (int j = 0; j < k; ++j) means.row(j) /= counts[static_cast<std::size_t>(j)];
  return means;
}

}  // namespace

HardResult hard_from_means(const Matrix& data, const Matrix& means, Mode mode,
                           const ClusterConfig& cfg) {
  const int k = static_cast<int>(means.rows());
  detail::check_problem(data, k);
  if (!(cfg.update_rate > 0.0 && cfg.update_rate <= 1.0)) {
    throw InvalidArgument("update rate must be in (0, 1]");
  }
  const Regularizers reg = resolve_regularizers(data, cfg);

  HardResult res;
  res.labels = nearest_mean_labels(data, means);
  ClusterStats stats = label_stats(data, res.labels, k, reg.eps_cov);
  res.trace.push_back(objective(stats, mode));
  if (cfg.record_history) res.history.push_back(res.labels);

  for (res.iterations = 0; res.iterations < cfg.max_iters;) {
    const ClusterStats used = cfg.enforce_standard ? standardized(stats) : stats;
    Labels next = argmin_labels(assignment_scores(data, used, mode, reg.eps_sigma));
    if (next == res.labels) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    res.labels = std::move(next);
    const ClusterStats fresh = label_stats(data, res.labels, k, reg.eps_cov);
    res.trace.push_back(objective(fresh, mode));
    if (cfg.record_history) res.history.push_back(res.labels);
    blend(stats, fresh, cfg.update_rate);
  }
  res.objective = res.trace.back();
  return res;
}

HardResult run_hard(const Matrix& data, int k, Mode mode, const ClusterConfig& cfg) {
  detail::check_problem(data, k);
  return detail::best_of<HardResult>(cfg.restarts, cfg.threads, [&](int r) {
    return hard_from_means(data, init_means(data, k, cfg.seed + static_cast<std::uint64_t>(r)),
                           mode, cfg);
  });
}

HardResult kmeans_from_means(const Matrix& data, const Matrix& means, const ClusterConfig& cfg) {
  const int k = static_cast<int>(means.rows());
  detail::check_problem(data, k);

  HardResult res;
  res.labels = nearest_mean_labels(data, means);
  if (!detail::reseed_empty(data, res.labels, k)) {
    throw InvalidArgument("k-means: fewer distinct samples than clusters");
  }
  res.trace.push_back(sse(data, res.labels, k));
  if (cfg.record_history) res.history.push_back(res.labels);

  for (res.iterations = 0; res.iterations < cfg.max_iters;) {
    Labels next = nearest_mean_labels(data, label_means(data, res.labels, k));
    if (next == res.labels) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    res.labels = std::move(next);
    if (!detail::reseed_empty(data, res.labels, k)) {
      throw InvalidArgument("k-means: fewer distinct samples than clusters");
    }
    res.trace.push_back(sse(data, res.labels, k));
    if (cfg.record_history) res.history.push_back(res.labels);
  }
  res.objective = res.trace.back();
  return res;
}

HardResult kmeans(const Matrix& data, int k, const ClusterConfig& cfg) {
  detail::check_problem(data, k);
  return detail::best_of<HardResult>(cfg.restarts, cfg.threads, [&](int r) {
    return kmeans_from_means(data, init_means(data, k, cfg.seed + static_cast<std::uint64_t>(r)),
                             cfg);
  });
}

double sse(const Matrix& data, const Labels& labels, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != data.rows()) {
    throw InvalidArgument("sse: one label per sample required");
  }
  one_hot(labels, k);  // range check
  const Matrix means = label_means(data, labels, k);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total += (data.row(static_cast<Eigen::Index>(i)) - means.row(labels[i])).squaredNorm();
  }
  return total;
}

}  // namespace baryfactor::cluster
