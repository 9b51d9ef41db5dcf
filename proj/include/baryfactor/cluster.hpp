#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "baryfactor/common.hpp"
#include "baryfactor/gaussbary.hpp"

/// Discrete factor discovery: K Gaussian clusters chosen to minimize the
/// spread of their Wasserstein barycenter, plus the k-means family used as
/// baselines.
///
/// Data sets are N x d matrices with one sample per row.  Assignment
/// matrices are N x K and row-stochastic (P(i, k) = nu(k | x_i)); cluster
/// weights are P_k = (1/N) sum_i P(i, k).
namespace baryfactor::cluster {

using gaussbary::GaussianCluster;

enum class Mode {
  /// Full covariances; objective Tr[Sigma_y].
  kGeneral,
  /// Clusters summarized by sigma_k = sqrt(Tr Sigma_k); objective sigma_y.
  kIsotropic,
};

struct ClusterConfig {
  std::uint64_t seed = 0;
  int max_iters = 300;
  int restarts = 100;
  /// Initial step of the line search, in units of the normalized gradient.
  double step = 1.0;
  double armijo_alpha = 0.3;
  double armijo_beta = 0.5;
  int max_backtracks = 40;
  /// Covariance ridge; default 1e-8 * Tr(Sigma_x) / d.
  std::optional<double> eps_cov;
  /// Guard added to sigma_k in denominators; default 1e-6 * sqrt(Tr Sigma_x).
  std::optional<double> eps_sigma;
  /// Smoothing rate c in (0, 1] for the hard algorithms' statistics update.
  double update_rate = 1.0;
  /// Relative objective change that stops the iteration.
  double tol = 1e-9;
  /// Replace the cluster statistics by equal weights and a shared isotropic
  /// covariance before each hard assignment ("standard data" regime).
  bool enforce_standard = false;
  bool record_history = false;
  /// Restarts are independent; more than one thread runs them concurrently.
  int threads = 1;
};

struct Regularizers {
  double eps_cov = 0.0;
  double eps_sigma = 0.0;
};

Regularizers resolve_regularizers(const Matrix& data, const ClusterConfig& cfg);

struct ClusterStats {
  std::vector<GaussianCluster> clusters;
  /// Clusters with no mass; their entries in `clusters` are placeholders and
  /// must be re-seeded before the statistics are used.
  std::vector<int> empty;
};

/// Weighted means, covariances (+ eps_cov * I) and weights of every cluster.
ClusterStats cluster_stats(const Matrix& data, const Matrix& assignment, double eps_cov);
ClusterStats cluster_stats(const Matrix& data, const Labels& labels, int k, double eps_cov);

/// Tr[Sigma_y] (general) or sigma_y = sum_k P_k sigma_k (isotropic).
double objective(const ClusterStats& stats, Mode mode);

/// Gradient of Tr[Sigma_y] with its barycenter.
struct GeneralGradient {
  /// Entry (i, k) = vec(I)^T W_k vec[(x_i - m_k)(x_i - m_k)^T + Sigma_k].
  /// This is N times the derivative with respect to P(i, k).
  Matrix grad;
  gaussbary::BarycenterGaussian bary;
};

GeneralGradient general_gradient(const Matrix& data, const ClusterStats& stats);
Matrix grad_general(const Matrix& data, const Matrix& assignment, const ClusterConfig& cfg = {});

/// The d^2 x d^2 weight matrix W_k assembled literally from Kronecker
/// products.  `general_gradient` uses an equivalent O(d^3)-per-cluster
/// contraction; this form exists to cross-check it.
Matrix weight_matrix(const ClusterStats& stats, const matcore::SymMatrix& sigma_y, int k);

/// Entry (i, k) = |x_i - m_k|^2 / (sigma_k + eps_sigma) + sigma_k, which is
/// 2N times d sigma_y / d P(i, k) when eps_sigma = 0.
Matrix grad_isotropic(const ClusterStats& stats, const Matrix& data, double eps_sigma);
Matrix grad_isotropic(const Matrix& data, const Matrix& assignment, const ClusterConfig& cfg = {});

/// Squared Euclidean distance matrix.
Matrix pairwise_sq_dists(const Matrix& data);

/// Isotropic gradient from pairwise distances only:
///   (i, k) = sum_j P(j,k) D_ij / (eps_sigma + sqrt(2 sum_{j,l} P(j,k) P(l,k) D_jl)),
/// which is N times d sigma_y / d P(i, k) when eps_sigma = 0.
Matrix grad_pairwise(const Matrix& dist2, const Matrix& assignment, double eps_sigma);

/// Euclidean projection of a vector onto the probability simplex.
Vector project_simplex(const Vector& v);
/// Row-wise projection onto the product of simplices.
Matrix project_rows_simplex(const Matrix& m);

/// Throws InvalidArgument unless every row is in the simplex within `tol`.
void check_assignment(const Matrix& assignment, double tol = 1e-10);

Matrix one_hot(const Labels& labels, int k);
/// Row-wise argmax, ties to the lowest index.
Labels argmax_labels(const Matrix& assignment);
/// Row-wise argmin, ties to the lowest index.
Labels argmin_labels(const Matrix& scores);

/// K distinct samples drawn uniformly as initial means.
Matrix init_means(const Matrix& data, int k, std::uint64_t seed);
Labels nearest_mean_labels(const Matrix& data, const Matrix& means);

struct SoftResult {
  Matrix assignment;
  std::vector<double> trace;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  int restart = 0;
};

struct HardResult {
  Labels labels;
  std::vector<double> trace;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  int restart = 0;
  /// Label vector after every assignment step when `record_history` is set.
  std::vector<Labels> history;
};

/// Projected gradient descent with Armijo backtracking over the product of
/// simplices, from a nearest-mean one-hot start.
SoftResult soft_from_means(const Matrix& data, const Matrix& means, Mode mode,
                           const ClusterConfig& cfg);
/// Best of `cfg.restarts` runs of soft_from_means; restart r is seeded with
/// cfg.seed + r and the lowest objective wins (ties to the lowest r).
SoftResult run_soft(const Matrix& data, int k, Mode mode, const ClusterConfig& cfg);

/// Hard reassignment: every sample moves to the cluster with the smallest
/// gradient entry.  In isotropic mode this is barycentric k-means,
///   k_i = argmin_k |x_i - m_k|^2 / sigma_k + sigma_k.
HardResult hard_from_means(const Matrix& data, const Matrix& means, Mode mode,
                           const ClusterConfig& cfg);
HardResult run_hard(const Matrix& data, int k, Mode mode, const ClusterConfig& cfg);

/// Lloyd's algorithm; the objective is the sum of squared errors.
HardResult kmeans_from_means(const Matrix& data, const Matrix& means, const ClusterConfig& cfg);
HardResult kmeans(const Matrix& data, int k, const ClusterConfig& cfg);

/// Sum of squared distances to the assigned cluster means.
double sse(const Matrix& data, const Labels& labels, int k);

/// Fuzzy k-means with exponent c > 1, minimizing
///   J_c = sum_i sum_k P(i,k)^c |x_i - m_k|^2.
SoftResult fuzzy_from_means(const Matrix& data, const Matrix& means, double c,
                            const ClusterConfig& cfg);
SoftResult fuzzy_kmeans(const Matrix& data, int k, double c, const ClusterConfig& cfg);

/// Membership update of fuzzy k-means for fixed means.  A sample that
/// coincides with a mean gets the indicator of the first such mean.
Matrix fuzzy_memberships(const Matrix& data, const Matrix& means, double c);
double fuzzy_objective(const Matrix& data, const Matrix& memberships, const Matrix& means,
                       double c);

}  // namespace baryfactor::cluster
