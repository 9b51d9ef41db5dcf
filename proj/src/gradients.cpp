#include <cmath>
#include <sstream>

#include "baryfactor/cluster.hpp"

namespace baryfactor::cluster {

using matcore::EigenPair;
using matcore::SymMatrix;

namespace {

// Eigen-decomposition of Sigma_y^1/2 Sigma_k Sigma_y^1/2 with square roots of
// the eigenvalues.
struct InnerSpectrum {
  Matrix u;
  Vector root;  // D_k^1/2
};

InnerSpectrum inner_spectrum(const SymMatrix& root_y, const SymMatrix& cov, int k) {
  std::ostringstream name;
  name << "cluster " << k << " inner product";
  EigenPair e = matcore::sym_eig(
      SymMatrix::symmetrized(root_y.matrix() * cov.matrix() * root_y.matrix()), name.str());
  return {std::move(e.vectors), e.values.cwiseMax(0.0).cwiseSqrt()};
}

void require_no_empty(const ClusterStats& stats) {
  if (!stats.empty.empty()) {
    std::ostringstream os;
    os << "gradient: cluster " << stats.empty.front() << " is empty; re-seed it first";
    throw InvalidArgument(os.str());
  }
}

gaussbary::BarycenterGaussian solve(const ClusterStats& stats) {
  std::vector<double> w;
  std::vector<SymMatrix> covs;
  for (const auto& c : stats.clusters) {
    w.push_back(c.weight);
    covs.push_back(c.cov);
  }
  return gaussbary::solve_barycenter_covariance(w, covs);
}

// sum_h P_h (U_h x U_h) diag(s_a s_b / (s_a + s_b)) (U_h x U_h)^T
Matrix kronecker_system(const ClusterStats& stats, const std::vector<InnerSpectrum>& spectra) {
  const Eigen::Index d = stats.clusters.front().mean.size();
  Matrix system = Matrix::Zero(d * d, d * d);
  for (std::size_t h = 0; h < spectra.size(); ++h) {
    const auto& s = spectra[h].root;
    Vector diag(d * d);
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < d; ++b) {
        const double sum = s(a) + s(b);
        diag(a * d + b) = sum > 0.0 ? s(a) * s(b) / sum : 0.0;
      }
    }
    const Matrix uu = matcore::kron(spectra[h].u, spectra[h].u);
    system += stats.clusters[h].weight * uu * diag.asDiagonal() * uu.transpose();
  }
  return system;
}

int weakest_cluster(const std::vector<InnerSpectrum>& spectra) {
  int worst = 0;
  for (std::size_t k = 1; k < spectra.size(); ++k) {
    if (spectra[k].root.minCoeff() < spectra[static_cast<std::size_t>(worst)].root.minCoeff()) {
      worst = static_cast<int>(k);
    }
  }
  return worst;
}

}  // namespace

GeneralGradient general_gradient(const Matrix& data, const ClusterStats& stats) {
  require_no_empty(stats);
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  const auto k_count = static_cast<Eigen::Index>(stats.clusters.size());

  GeneralGradient out;
  out.bary = solve(stats);
  const SymMatrix root_y = matcore::sqrtm_psd(out.bary.cov, "barycenter covariance");

  std::vector<InnerSpectrum> spectra;
  spectra.reserve(stats.clusters.size());
  for (Eigen::Index k = 0; k < k_count; ++k) {
    spectra.push_back(inner_spectrum(root_y, stats.clusters[static_cast<std::size_t>(k)].cov,
                                     static_cast<int>(k)));
  }

  // vec(I)^T W_k = [(A x A) L_k M^-1 (A x A) vec(I)]^T with A = Sigma_y^1/2,
  // and (A x A) vec(I) = vec(Sigma_y).  Only the one d^2 system is solved;
  // L_k and (A x A) act through their matrix forms.
  const Matrix system = kronecker_system(stats, spectra);
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "general gradient: singular Kronecker system (cluster " << weakest_cluster(spectra)
       << " is degenerate; increase eps_cov)";
    throw NumericalError(os.str());
  }
  const Matrix v = matcore::unvec(llt.solve(matcore::vec(out.bary.cov.matrix())), d, d);

  out.grad.resize(n, k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto& sp = spectra[static_cast<std::size_t>(k)];
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < d; ++b) {
        if (!(sp.root(a) + sp.root(b) > 0.0)) {
          std::ostringstream os;
          os << "general gradient: singular Kronecker system (cluster " << k
             << " is degenerate; increase eps_cov)";
          throw NumericalError(os.str());
        }
      }
    }
    Matrix rotated = sp.u.transpose() * v * sp.u;
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < d; ++b) rotated(a, b) /= sp.root(a) + sp.root(b);
    }
    const Matrix r = root_y.matrix() * (sp.u * rotated * sp.u.transpose()) * root_y.matrix();

    const auto& c = stats.clusters[static_cast<std::size_t>(k)];
    const double cov_term = (r.array() * c.cov.matrix().array()).sum();
    const Matrix centered = data.rowwise() - c.mean.transpose();
    out.grad.col(k) = ((centered * r).array() * centered.array()).rowwise().sum().matrix();
    out.grad.col(k).array() += cov_term;
  }
  return out;
}

Matrix grad_general(const Matrix& data, const Matrix& assignment, const ClusterConfig& cfg) {
  const Regularizers reg = resolve_regularizers(data, cfg);
  return general_gradient(data, cluster_stats(data, assignment, reg.eps_cov)).grad;
}

Matrix weight_matrix(const ClusterStats& stats, const SymMatrix& sigma_y, int k) {
  require_no_empty(stats);
  if (k < 0 || static_cast<std::size_t>(k) >= stats.clusters.size()) {
    throw InvalidArgument("weight_matrix: cluster index out of range");
  }
  const Eigen::Index d = sigma_y.dim();
  const SymMatrix root_y = matcore::sqrtm_psd(sigma_y, "barycenter covariance");
  std::vector<InnerSpectrum> spectra;
  for (std::size_t h = 0; h < stats.clusters.size(); ++h) {
    spectra.push_back(inner_spectrum(root_y, stats.clusters[h].cov, static_cast<int>(h)));
  }
  const Matrix system = kronecker_system(stats, spectra);

  const auto& sp = spectra[static_cast<std::size_t>(k)];
  Vector inv_sum(d * d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) inv_sum(a * d + b) = 1.0 / (sp.root(a) + sp.root(b));
  }
  const Matrix uu = matcore::kron(sp.u, sp.u);
  const Matrix lk = uu * inv_sum.asDiagonal() * uu.transpose();
  const Matrix aa = matcore::kron(root_y.matrix(), root_y.matrix());
  return aa * system.inverse() * lk * aa;
}

Matrix grad_isotropic(const ClusterStats& stats, const Matrix& data, double eps_sigma) {
  require_no_empty(stats);
  Matrix g(data.rows(), static_cast<Eigen::Index>(stats.clusters.size()));
  for (std::size_t k = 0; k < stats.clusters.size(); ++k) {
    const auto& c = stats.clusters[k];
    const double sigma = c.std_dev();
    const auto col = static_cast<Eigen::Index>(k);
    g.col(col) = (data.rowwise() - c.mean.transpose()).rowwise().squaredNorm() / (sigma + eps_sigma);
    g.col(col).array() += sigma;
  }
  return g;
}

Matrix grad_isotropic(const Matrix& data, const Matrix& assignment, const ClusterConfig& cfg) {
  const Regularizers reg = resolve_regularizers(data, cfg);
  return grad_isotropic(cluster_stats(data, assignment, reg.eps_cov), data, reg.eps_sigma);
}

Matrix pairwise_sq_dists(const Matrix& data) {
  const Vector sq = data.rowwise().squaredNorm();
  Matrix d2 = -2.0 * data * data.transpose();
  d2.colwise() += sq;
  d2.rowwise() += sq.transpose();
  d2 = d2.cwiseMax(0.0);
  d2.diagonal().setZero();
  return 0.5 * (d2 + d2.transpose());
}

Matrix grad_pairwise(const Matrix& dist2, const Matrix& assignment, double eps_sigma) {
  if (dist2.rows() != dist2.cols() || dist2.rows() != assignment.rows()) {
    throw InvalidArgument("grad_pairwise: distance matrix must be N x N for an N x K assignment");
  }
  const Matrix weighted = dist2 * assignment;  // (i, k) = sum_j D_ij P(j, k)
  Matrix g(assignment.rows(), assignment.cols());
  for (Eigen::Index k = 0; k < assignment.cols(); ++k) {
    const double scatter = assignment.col(k).dot(weighted.col(k));
    const double denom = std::sqrt(2.0 * std::max(scatter, 0.0)) + eps_sigma;
    g.col(k) = denom > 0.0 ? Vector(weighted.col(k) / denom) : Vector::Zero(assignment.rows());
  }
  return g;
}

}  // namespace baryfactor::cluster
