#include "baryfactor/gaussbary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace baryfactor::gaussbary {

using matcore::inv_sqrtm_pd;
using matcore::sqrtm_psd;
using matcore::sym_eig;

namespace {

void check_shapes(std::span<const double> weights, std::span<const SymMatrix> covs) {
  if (weights.empty() || weights.size() != covs.size()) {
    throw InvalidArgument("barycenter: need one weight per covariance and at least one cluster");
  }
  const auto d = covs.front().dim();
  for (std::size_t k = 0; k < covs.size(); ++k) {
    if (covs[k].dim() != d) throw InvalidArgument("barycenter: covariance dimensions differ");
    if (!(weights[k] >= 0.0)) throw InvalidArgument("barycenter: weights must be nonnegative");
  }
}

struct RootPair {
  SymMatrix root;
  SymMatrix inv_root;
};

RootPair roots_of(const SymMatrix& s) {
  const matcore::EigenPair e = sym_eig(s, "barycenter iterate");
  const Eigen::Index d = s.dim();
  const double lo = e.values(d - 1);
  if (!(lo > 0.0)) throw NumericalError("barycenter iterate lost positive definiteness");
  const Vector r = e.values.cwiseSqrt();
  return {SymMatrix::symmetrized(e.vectors * r.asDiagonal() * e.vectors.transpose()),
          SymMatrix::symmetrized(e.vectors * r.cwiseInverse().asDiagonal() *
                                 e.vectors.transpose())};
}

// sum_k w_k (R Sigma_k R)^1/2
SymMatrix fixed_point_map(const SymMatrix& root, std::span<const double> weights,
                          std::span<const SymMatrix> covs) {
  Matrix acc = Matrix::Zero(root.dim(), root.dim());
  for (std::size_t k = 0; k < covs.size(); ++k) {
    if (weights[k] == 0.0) continue;
    const SymMatrix inner =
        SymMatrix::symmetrized(root.matrix() * covs[k].matrix() * root.matrix());
    acc += weights[k] * sqrtm_psd(inner, "barycenter inner product").matrix();
  }
  return SymMatrix::symmetrized(acc);
}

}  // namespace

double GaussianCluster::std_dev() const { return std::sqrt(std::max(cov.trace(), 0.0)); }

double BarycenterGaussian::std_dev() const { return std::sqrt(std::max(cov.trace(), 0.0)); }

double fixed_point_residual(const SymMatrix& sigma, std::span<const double> weights,
                            std::span<const SymMatrix> covs) {
  check_shapes(weights, covs);
  const SymMatrix root = sqrtm_psd(sigma, "barycenter covariance");
  const SymMatrix mapped = fixed_point_map(root, weights, covs);
  return (sigma.matrix() - mapped.matrix()).norm() / sigma.matrix().norm();
}

BarycenterGaussian solve_barycenter_covariance(std::span<const double> weights,
                                               std::span<const SymMatrix> covs,
                                               const FixedPointOptions& opts) {
  check_shapes(weights, covs);
  const Eigen::Index d = covs.front().dim();

  bool any_pd = false;
  Matrix start = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < covs.size(); ++k) {
    start += weights[k] * covs[k].matrix();
    if (weights[k] > 0.0 && !any_pd) {
      Eigen::LLT<Matrix> llt(covs[k].matrix());
      any_pd = llt.info() == Eigen::Success;
    }
  }
  if (!any_pd) {
    throw DegenerateBarycenter(
        "barycenter: every weighted covariance is singular; regularize the cluster covariances");
  }

  SymMatrix sigma = SymMatrix::symmetrized(start);
  double residual = 0.0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const RootPair rp = roots_of(sigma);
    const SymMatrix mapped = fixed_point_map(rp.root, weights, covs);
    const double scale = sigma.matrix().norm();
    residual = (sigma.matrix() - mapped.matrix()).norm() / scale;
    if (residual <= opts.residual_tol) return {Vector(), sigma, residual, it};

    const Matrix next =
        rp.inv_root.matrix() * mapped.matrix() * mapped.matrix() * rp.inv_root.matrix();
    const double change = (next - sigma.matrix()).norm() / scale;
    sigma = SymMatrix::symmetrized(next);
    if (change <= opts.change_tol) {
      residual = fixed_point_residual(sigma, weights, covs);
      return {Vector(), sigma, residual, it + 1};
    }
  }
  std::ostringstream os;
  os << "barycenter: fixed-point iteration did not converge in " << opts.max_iters
     << " iterations (residual " << residual << ")";
  throw NonConvergence(os.str(), residual);
}

BarycenterGaussian barycenter(std::span<const GaussianCluster> clusters,
                              const FixedPointOptions& opts) {
  if (clusters.empty()) throw InvalidArgument("barycenter: no clusters");
  std::vector<double> weights;
  std::vector<SymMatrix> covs;
  weights.reserve(clusters.size());
  covs.reserve(clusters.size());
  const Eigen::Index d = clusters.front().mean.size();
  Vector mean = Vector::Zero(d);
  double total = 0.0;
  for (const auto& c : clusters) {
    if (c.mean.size() != d || c.cov.dim() != d) {
      throw InvalidArgument("barycenter: cluster dimensions differ");
    }
    weights.push_back(c.weight);
    covs.push_back(c.cov);
    mean += c.weight * c.mean;
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "barycenter: weights sum to " << total << ", expected 1";
    throw InvalidArgument(os.str());
  }
  BarycenterGaussian out = solve_barycenter_covariance(weights, covs, opts);
  out.mean = std::move(mean);
  return out;
}

double isotropic_std(std::span<const double> sigmas, std::span<const double> weights) {
  if (sigmas.size() != weights.size()) {
    throw InvalidArgument("isotropic_std: sigmas and weights differ in length");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < sigmas.size(); ++k) s += weights[k] * sigmas[k];
  return s;
}

AffineMap ot_affine_map(const GaussianCluster& from, const BarycenterGaussian& to) {
  if (from.mean.size() != to.mean.size() || from.cov.dim() != to.cov.dim()) {
    throw InvalidArgument("ot_affine_map: dimension mismatch");
  }
  if (!matcore::is_positive_definite(from.cov)) {
    throw NumericalError(
        "ot_affine_map: source covariance is singular; regularize it (Sigma + eps*I) first");
  }
  const SymMatrix root = sqrtm_psd(from.cov, "source covariance");
  const SymMatrix inv_root = inv_sqrtm_pd(from.cov, "source covariance");
  const SymMatrix middle = sqrtm_psd(
      SymMatrix::symmetrized(root.matrix() * to.cov.matrix() * root.matrix()), "transport core");
  SymMatrix a =
      SymMatrix::symmetrized(inv_root.matrix() * middle.matrix() * inv_root.matrix());
  Vector b = to.mean - a.matrix() * from.mean;
  return {std::move(a), std::move(b)};
}

double w2_gaussian(const GaussianCluster& g1, const GaussianCluster& g2) {
  if (g1.mean.size() != g2.mean.size() || g1.cov.dim() != g2.cov.dim()) {
    throw InvalidArgument("w2_gaussian: dimension mismatch");
  }
  const SymMatrix root2 = sqrtm_psd(g2.cov, "w2 second covariance");
  const SymMatrix cross = sqrtm_psd(
      SymMatrix::symmetrized(root2.matrix() * g1.cov.matrix() * root2.matrix()), "w2 cross term");
  const double shift = (g1.mean - g2.mean).squaredNorm();
  const double value = shift + g1.cov.trace() + g2.cov.trace() - 2.0 * cross.trace();
  const double scale = shift + g1.cov.trace() + g2.cov.trace();
  if (value < 0.0) {
    if (value < -1e-10 * std::max(1.0, scale)) {
      std::ostringstream os;
      os << "w2_gaussian: negative squared distance " << value;
      throw NumericalError(os.str());
    }
    return 0.0;
  }
  return value;
}

double pairwise_total_cost(std::span<const GaussianCluster> clusters) {
  double total = 0.0;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    for (std::size_t h = k + 1; h < clusters.size(); ++h) {
      // Off-diagonal pairs appear twice in the double sum; the 1/2 cancels.
      total += clusters[k].weight * clusters[h].weight * w2_gaussian(clusters[k], clusters[h]);
    }
  }
  return total;
}

double barycenter_total_cost(std::span<const GaussianCluster> clusters,
                             const BarycenterGaussian& bary) {
  const GaussianCluster mu{1.0, bary.mean, bary.cov};
  double total = 0.0;
  for (const auto& c : clusters) total += c.weight * w2_gaussian(c, mu);
  return total;
}

SymMatrix mixture_covariance(std::span<const GaussianCluster> clusters) {
  if (clusters.empty()) throw InvalidArgument("mixture_covariance: no clusters");
  const Eigen::Index d = clusters.front().mean.size();
  Vector mean = Vector::Zero(d);
  for (const auto& c : clusters) mean += c.weight * c.mean;
  Matrix acc = Matrix::Zero(d, d);
  for (const auto& c : clusters) {
    const Vector dev = c.mean - mean;
    acc += c.weight * (c.cov.matrix() + dev * dev.transpose());
  }
  return SymMatrix::symmetrized(acc);
}

}  // namespace baryfactor::gaussbary
