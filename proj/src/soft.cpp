#include <cmath>

#include "baryfactor/cluster.hpp"
#include "cluster_internal.hpp"

namespace baryfactor::cluster {

namespace {

struct Evaluated {
  ClusterStats stats;
  double value = 0.0;
};

bool evaluate(const Matrix& data, const Matrix& p, Mode mode, double eps_cov, Evaluated& out) {
  out.stats = cluster_stats(data, p, eps_cov);
  if (!out.stats.empty.empty()) return false;
  out.value = objective(out.stats, mode);
  return true;
}

// Gradient of the objective itself (not a multiple of it).
Matrix true_gradient(const Matrix& data, const Evaluated& at, Mode mode, double eps_sigma) {
  const double n = static_cast<double>(data.rows());
  if (mode == Mode::kGeneral) return general_gradient(data, at.stats).grad / n;
  return grad_isotropic(at.stats, data, eps_sigma) / (2.0 * n);
}

}  // namespace

SoftResult soft_from_means(const Matrix& data, const Matrix& means, Mode mode,
                           const ClusterConfig& cfg) {
  const int k = static_cast<int>(means.rows());
  detail::check_problem(data, k);
  const Regularizers reg = resolve_regularizers(data, cfg);

  Labels labels = nearest_mean_labels(data, means);
  if (!detail::reseed_empty(data, labels, k)) {
    throw InvalidArgument("soft clustering: fewer distinct samples than clusters");
  }
  Matrix p = one_hot(labels, k);

  SoftResult res;
  Evaluated cur;
  evaluate(data, p, mode, reg.eps_cov, cur);
  res.trace.push_back(cur.value);

  for (res.iterations = 0; res.iterations < cfg.max_iters;) {
    const Matrix grad = true_gradient(data, cur, mode, reg.eps_sigma);
    Matrix dir = grad.colwise() - grad.rowwise().mean();
    const double scale = dir.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) {
      res.converged = true;
      break;
    }
    dir /= scale;

    bool accepted = false;
    double eta = cfg.step;
    Matrix trial_p;
    Evaluated trial;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt, eta *= cfg.armijo_beta) {
      trial_p = project_rows_simplex(p - eta * dir);
      if (!evaluate(data, trial_p, mode, reg.eps_cov, trial)) continue;
      const double decrease = (grad.array() * (trial_p - p).array()).sum();
      if (trial.value - cur.value <= cfg.armijo_alpha * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    const double change = std::abs(cur.value - trial.value) / std::max(std::abs(cur.value), 1e-300);
    p = std::move(trial_p);
    cur = std::move(trial);
    res.trace.push_back(cur.value);
    if (change < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.assignment = std::move(p);
  res.objective = cur.value;
  return res;
}

SoftResult run_soft(const Matrix& data, int k, Mode mode, const ClusterConfig& cfg) {
  detail::check_problem(data, k);
  return detail::best_of<SoftResult>(cfg.restarts, cfg.threads, [&](int r) {
    return soft_from_means(data, init_means(data, k, cfg.seed + static_cast<std::uint64_t>(r)),
                           mode, cfg);
  });
}

}  // namespace baryfactor::cluster
