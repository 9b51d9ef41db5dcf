#include "baryfactor/factor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "baryfactor/matcore.hpp"
#include "baryfactor/rng.hpp"

namespace baryfactor::factor {

namespace {

void check_inputs(const Matrix& data, const LatentState& state) {
  if (data.rows() < 1 || data.cols() < 1) throw InvalidArgument("data set is empty");
  if (state.zbar.size() != data.rows()) {
    throw InvalidArgument("latent state must have one mean per sample");
  }
  if (!(state.eps2 > 0.0)) throw InvalidArgument("latent bandwidth eps^2 must be positive");
}

int check_nodes(int nodes) {
  if (nodes < 3 || nodes % 2 == 0) throw InvalidArgument("Simpson quadrature needs an odd node count >= 3");
  return nodes;
}

double simpson_weight(int j, int nodes) {
  if (j == 0 || j == nodes - 1) return 1.0;
  return j % 2 == 1 ? 4.0 : 2.0;
}

struct Grid {
  double lo = 0.0;
  double h = 0.0;
};

Grid make_grid(const LatentState& state, int nodes) {
  const double eps = std::sqrt(state.eps2);
  const double lo = state.zbar.minCoeff() - 5.0 * eps;
  const double hi = state.zbar.maxCoeff() + 5.0 * eps;
  return {lo, (hi - lo) / static_cast<double>(nodes - 1)};
}

double mixture_cdf(double z, const LatentState& state) {
  const double scale = std::sqrt(2.0 * state.eps2);
  double total = 0.0;
  for (Eigen::Index i = 0; i < state.zbar.size(); ++i) {
    total += 0.5 * std::erfc(-(z - state.zbar(i)) / scale);
  }
  return total / static_cast<double>(state.zbar.size());
}

}  // namespace

double latent_eps2(const Vector& zbar, double alpha) {
  if (zbar.size() < 1) throw InvalidArgument("latent_eps2: empty latent vector");
  return alpha * alpha * zbar.squaredNorm() / static_cast<double>(zbar.size());
}

LatentState::LatentState(Vector zbar_in, double alpha_in) : zbar(std::move(zbar_in)), alpha(alpha_in) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
  refresh();
}

void LatentState::refresh() {
  const double n = static_cast<double>(zbar.size());
  eps2 = std::max(latent_eps2(zbar, alpha), 1e-12 * (1.0 + zbar.squaredNorm() / n));
}

ConditionalStats conditional_stats(double z, const Matrix& data, const LatentState& state) {
  check_inputs(data, state);
  if (!std::isfinite(z)) {
    std::ostringstream os;
    os << "conditional_stats: latent value " << z << " is not finite";
    throw NumericalError(os.str());
  }
  const double n = static_cast<double>(data.rows());
  ConditionalStats out;
  out.z = z;
  const Vector logs =
      (-0.5 * std::log(2.0 * std::numbers::pi * state.eps2)) -
      (z - state.zbar.array()).square() / (2.0 * state.eps2);
  const double top = logs.maxCoeff();
  const Vector scaled = (logs.array() - top).exp();
  const double mass = scaled.sum();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    std::ostringstream os;
    os << "conditional_stats: all assignment densities vanish at z = " << z;
    throw NumericalError(os.str());
  }
  out.likelihood = logs.array().exp();
  out.bayes = scaled / mass;
  out.log_density = top + std::log(mass) - std::log(n);
  out.density = std::exp(out.log_density);
  out.mean = data.transpose() * out.bayes;
  const double var = ((data.rowwise() - out.mean.transpose()).rowwise().squaredNorm().array() *
                      out.bayes.array())
                         .sum();
  out.std_dev = std::sqrt(std::max(var, 0.0));
  return out;
}

Vector afd_gradient(double z, const Matrix& data, const LatentState& state, double eps_sigma,
                    GradientForm form) {
  const ConditionalStats cs = conditional_stats(z, data, state);
  const double norm2 = state.zbar.squaredNorm();
  const Vector dev2 = (data.rowwise() - cs.mean.transpose()).rowwise().squaredNorm();
  const Vector s = cs.std_dev + dev2.array() / (cs.std_dev + eps_sigma);
  const Vector diff = z - state.zbar.array();

  Vector g = 0.5 * diff.array() / state.eps2 * cs.bayes.array() * s.array();
  if (norm2 > 0.0) {
    const double shift = form == GradientForm::kDerived ? 1.0 : 1.0 / std::sqrt(norm2);
    const double c = (s.array() * (diff.array().square() / state.eps2 - shift) * cs.bayes.array())
                         .sum() /
                     norm2;
    g += 0.5 * c * state.zbar;
  }
  return g;
}

double sigma_quadrature(const Matrix& data, const LatentState& state, int nodes) {
  check_inputs(data, state);
  check_nodes(nodes);
  const Grid grid = make_grid(state, nodes);
  if (!(grid.h > 0.0)) return conditional_stats(state.zbar(0), data, state).std_dev;
  double total = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const ConditionalStats cs = conditional_stats(grid.lo + grid.h * j, data, state);
    total += simpson_weight(j, nodes) * cs.std_dev * cs.density;
  }
  return total * grid.h / 3.0;
}

Vector expected_gradient(const Matrix& data, const LatentState& state, int nodes,
                         GradientForm form) {
  check_inputs(data, state);
  check_nodes(nodes);
  const Grid grid = make_grid(state, nodes);
  Vector total = Vector::Zero(data.rows());
  for (int j = 0; j < nodes; ++j) {
    const double z = grid.lo + grid.h * j;
    const double density = conditional_stats(z, data, state).density;
    total += simpson_weight(j, nodes) * density * afd_gradient(z, data, state, 1e-12, form);
  }
  return total * grid.h / 3.0;
}

Vector initial_zbar(const Matrix& data, const AfdConfig& cfg) {
  if (data.rows() < 2) throw InvalidArgument("need at least two samples");
  if (cfg.init == Init::kRandom) {
    Rng rng(cfg.seed);
    Vector z(data.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.uniform(-1.0, 1.0);
    return z;
  }
  const Matrix centered = data.rowwise() - data.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows());
  Vector axis = matcore::sym_eig(matcore::SymMatrix::symmetrized(cov), "data covariance").vectors.col(0);
  Eigen::Index lead = 0;
  axis.cwiseAbs().maxCoeff(&lead);
  if (axis(lead) < 0.0) axis = -axis;
  if (!(cfg.init_eps > 0.0)) throw InvalidArgument("init_eps must be positive");
  Vector z = centered * axis;
  const double rms = std::sqrt(z.squaredNorm() / static_cast<double>(z.size()));
  if (rms > 0.0) z *= cfg.init_eps / (cfg.alpha * rms);
  return z;
}

AfdResult run_afd(const Matrix& data, const AfdConfig& cfg) {
  return run_afd(data, LatentState(initial_zbar(data, cfg), cfg.alpha), cfg);
}

AfdResult run_afd(const Matrix& data, LatentState start, const AfdConfig& cfg) {
  if (data.rows() < 2) throw InvalidArgument("need at least two samples");
  if (cfg.iters < 0 || cfg.eval_every < 1) throw InvalidArgument("invalid iteration schedule");
  start.refresh();
  check_inputs(data, start);

  AfdResult res;
  res.state = std::move(start);
  const double start_norm = res.state.zbar.norm();
  const double limit = 1e6 * (start_norm > 0.0 ? start_norm : 1.0);
  auto record = [&](int it) {
    res.trace_iters.push_back(it);
    res.sigma_trace.push_back(sigma_quadrature(data, res.state, cfg.quad_nodes));
  };
  record(0);

  Rng rng(cfg.seed);
  const auto n = static_cast<std::uint64_t>(data.rows());
  for (int it = 1; it <= cfg.iters; ++it) {
    const auto i = static_cast<Eigen::Index>(rng.index(n));
    const double z = res.state.zbar(i) + std::sqrt(res.state.eps2) * rng.normal();
    Vector next = res.state.zbar - cfg.eta * afd_gradient(z, data, res.state, cfg.eps_sigma);
    const double norm = next.norm();
    if (!std::isfinite(norm) || norm > limit) {
      res.diverged = true;
      break;
    }
    res.state.zbar = std::move(next);
    res.state.refresh();
    res.iterations = it;
    if (it % cfg.eval_every == 0 || it == cfg.iters) record(it);
  }
  return res;
}

std::vector<CurvePoint> principal_curve(const Matrix& data, const LatentState& state,
                                        int num_points) {
  check_inputs(data, state);
  if (num_points < 1) throw InvalidArgument("principal_curve: need at least one point");
  const double eps = std::sqrt(state.eps2);
  std::vector<CurvePoint> curve;
  curve.reserve(static_cast<std::size_t>(num_points));
  for (int j = 0; j < num_points; ++j) {
    const double target = (j + 0.5) / num_points;
    double lo = state.zbar.minCoeff() - 10.0 * eps;
    double hi = state.zbar.maxCoeff() + 10.0 * eps;
    while (mixture_cdf(lo, state) > target) lo -= 10.0 * eps;
    while (mixture_cdf(hi, state) < target) hi += 10.0 * eps;
    for (int it = 0; it < 200 && lo < hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (mixture_cdf(mid, state) < target ? lo : hi) = mid;
    }
    const double z = 0.5 * (lo + hi);
    curve.push_back({z, conditional_stats(z, data, state).mean});
  }
  return curve;
}

}  // namespace baryfactor::factor
