#pragma once

#include <cstdint>
#include <vector>

#include "baryfactor/common.hpp"

/// Continuous factor discovery on the real line.
///
/// Each sample x_i carries a Gaussian assignment nu(.|x_i) = N(zbar_i, eps^2)
/// over the latent variable z.  The conditional distribution of x given z is
/// the Bayes-weighted sample, and the objective is the mean over z of its
/// standard deviation,
///   sigma = int sigma(z) nu(z) dz,   nu(z) = (1/N) sum_i nu(z|x_i).
namespace baryfactor::factor {

/// alpha^2 |zbar|^2 / N, without any floor.
double latent_eps2(const Vector& zbar, double alpha);

struct LatentState {
  Vector zbar;
  double alpha = 0.025;
  /// Bandwidth, kept equal to max(latent_eps2, 1e-12 (1 + |zbar|^2 / N)).
  double eps2 = 0.0;

  LatentState() = default;
  LatentState(Vector zbar, double alpha);

  /// Recomputes eps2 from zbar; call after every change of zbar.
  void refresh();
};

struct ConditionalStats {
  double z = 0.0;
  Vector mean;
  double std_dev = 0.0;
  /// nu(z), and its logarithm, which stays finite when nu(z) underflows.
  double density = 0.0;
  double log_density = 0.0;
  /// nu(z|x_i).
  Vector likelihood;
  /// rho(x_i|z) = nu(z|x_i) / sum_j nu(z|x_j); sums to one.
  Vector bayes;
};

ConditionalStats conditional_stats(double z, const Matrix& data, const LatentState& state);

enum class GradientForm {
  /// C(z) = (1/|zbar|^2) sum_j s_j [(z - zbar_j)^2 / eps^2 - 1] rho_j.
  kDerived,
  /// Same with -1/|zbar| in place of -1.  Kept only to show that it does
  /// not match finite differences.
  kTypeset,
};

/// G_i(z) such that d sigma / d zbar_i = E_nu[G_i(z)]:
///   G_i = (1/2) [C(z) zbar_i + (z - zbar_i) / eps^2 rho_i s_i],
///   s_i = sigma(z) + |x_i - xbar(z)|^2 / (sigma(z) + eps_sigma).
/// Linear in N.
Vector afd_gradient(double z, const Matrix& data, const LatentState& state,
                    double eps_sigma = 1e-12, GradientForm form = GradientForm::kDerived);

/// Composite Simpson integration of sigma(z) nu(z) over
/// [min zbar - 5 eps, max zbar + 5 eps].  `nodes` must be odd and >= 3.
double sigma_quadrature(const Matrix& data, const LatentState& state, int nodes = 801);

/// E_nu[G(z)] by the same quadrature.
Vector expected_gradient(const Matrix& data, const LatentState& state, int nodes = 801,
                         GradientForm form = GradientForm::kDerived);

enum class Init { kRandom, kPc1 };

struct AfdConfig {
  double alpha = 0.025;
  double eta = 0.5;
  int iters = 50000;
  std::uint64_t seed = 0;
  Init init = Init::kPc1;
  /// The pc1 start is scaled so that its bandwidth eps = alpha * rms(zbar)
  /// equals init_eps.  Only the scale of zbar relative to the step size
  /// matters: sigma is invariant under zbar -> s zbar.
  double init_eps = 1.0;
  /// sigma is evaluated by quadrature every `eval_every` iterations
  /// (and at the start and end).
  int eval_every = 250;
  int quad_nodes = 801;
  double eps_sigma = 1e-12;
};

struct AfdResult {
  LatentState state;
  /// Iteration index and quadrature sigma at each evaluation.
  std::vector<int> trace_iters;
  std::vector<double> sigma_trace;
  int iterations = 0;
  /// Set when |zbar| grew more than 1e6 times; the state is the last one
  /// before the blow-up was detected.
  bool diverged = false;
};

/// Initial latent means: centered scores on the first principal component
/// scaled by cfg.init_eps, or uniform on [-1, 1] drawn from cfg.seed.
Vector initial_zbar(const Matrix& data, const AfdConfig& cfg);

/// Stochastic gradient descent: draw z from nu, step zbar -= eta G(z),
/// refresh eps^2.
AfdResult run_afd(const Matrix& data, const AfdConfig& cfg);
AfdResult run_afd(const Matrix& data, LatentState start, const AfdConfig& cfg);

struct CurvePoint {
  double z = 0.0;
  Vector mean;
};

/// Conditional means at the quantiles (j + 1/2) / num_points of nu, in
/// increasing z.
std::vector<CurvePoint> principal_curve(const Matrix& data, const LatentState& state,
                                        int num_points);

}  // namespace baryfactor::factor
