#pragma once

#include <span>

#include "baryfactor/common.hpp"
#include "baryfactor/matcore.hpp"

/// Wasserstein geometry of Gaussians: barycenters, optimal affine maps and
/// closed-form W2 distances.
namespace baryfactor::gaussbary {

using matcore::SymMatrix;

struct GaussianCluster {
  double weight = 0.0;
  Vector mean;
  SymMatrix cov;

  /// sqrt(Tr cov).
  double std_dev() const;
};

struct BarycenterGaussian {
  Vector mean;
  SymMatrix cov;
  /// Relative residual of the fixed-point equation at `cov`.
  double residual = 0.0;
  int iterations = 0;

  double std_dev() const;
};

struct AffineMap {
  SymMatrix a;
  Vector b;

  Vector operator()(const Vector& x) const { return a.matrix() * x + b; }
};

struct FixedPointOptions {
  int max_iters = 1000;
  double change_tol = 1e-12;
  double residual_tol = 1e-10;
};

/// Raised when no weighted covariance P_k * Sigma_k is positive definite.
class DegenerateBarycenter : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Solves Sigma = sum_k w_k (Sigma^1/2 Sigma_k Sigma^1/2)^1/2 by the
/// fixed-point map
///   Sigma <- Sigma^-1/2 (sum_k w_k (Sigma^1/2 Sigma_k Sigma^1/2)^1/2)^2 Sigma^-1/2
/// started from the linear average.  Weights need not sum to one (the
/// solution is homogeneous of degree two in the weights), which lets
/// finite-difference oracles perturb a single assignment entry.
///
/// Throws DegenerateBarycenter or NonConvergence.
BarycenterGaussian solve_barycenter_covariance(std::span<const double> weights,
                                               std::span<const SymMatrix> covs,
                                               const FixedPointOptions& opts = {});

/// Relative Frobenius residual ||S - F(S)|| / ||S|| of the fixed-point
/// equation.
double fixed_point_residual(const SymMatrix& sigma, std::span<const double> weights,
                            std::span<const SymMatrix> covs);

/// Barycenter of weighted Gaussians; weights must sum to one within 1e-10.
BarycenterGaussian barycenter(std::span<const GaussianCluster> clusters,
                              const FixedPointOptions& opts = {});

/// sigma_y = sum_k P_k sigma_k, the barycenter spread of isotropic clusters.
double isotropic_std(std::span<const double> sigmas, std::span<const double> weights);

/// Optimal transport map x -> A x + b pushing `from` onto `to`.
AffineMap ot_affine_map(const GaussianCluster& from, const BarycenterGaussian& to);

/// Squared 2-Wasserstein distance between two Gaussians.
double w2_gaussian(const GaussianCluster& g1, const GaussianCluster& g2);

/// 1/2 sum_{k,h} P_k P_h W2^2(rho_k, rho_h).  Equals barycenter_total_cost when
/// the covariances commute and is smaller otherwise.
double pairwise_total_cost(std::span<const GaussianCluster> clusters);

/// sum_k P_k W2^2(rho_k, mu) evaluated against a solved barycenter.
double barycenter_total_cost(std::span<const GaussianCluster> clusters,
                             const BarycenterGaussian& bary);

/// Covariance of the mixture: sum_k P_k (Sigma_k + (m_k - m)(m_k - m)^T).
SymMatrix mixture_covariance(std::span<const GaussianCluster> clusters);

}  // namespace baryfactor::gaussbary
