#include <doctest.h>

#include <numbers>

#include "baryfactor/factor.hpp"
#include "oracles.hpp"

using namespace baryfactor;
using namespace baryfactor::factor;

namespace {

Matrix noisy_line(std::mt19937_64& gen, int n, double noise, Vector* param = nullptr) {
  std::normal_distribution<double> nd(0.0, noise);
  Matrix x(n, 2);
  if (param) param->resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = oracle::uniform(gen, -1.0, 1.0);
    x(i, 0) = u + nd(gen);
    x(i, 1) = 0.5 * u + nd(gen);
    if (param) (*param)(i) = u;
  }
  return x;
}

double kendall_tau(const Vector& a, const Vector& b) {
  double concordant = 0.0, total = 0.0;
  for (int i = 0; i < a.size(); ++i)
    for (int j = i + 1; j < a.size(); ++j) {
      const double s = (a(i) - a(j)) * (b(i) - b(j));
      concordant += s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0);
      total += 1.0;
    }
  return concordant / total;
}

}  // namespace

TEST_CASE("latent_eps2 examples and the bandwidth floor") {
  CHECK(latent_eps2(Vector::Ones(4), 0.1) == doctest::Approx(0.01));
  CHECK(latent_eps2(Vector::Zero(5), 0.1) == 0.0);
  Vector centered(4);
  centered << -3, -1, 1, 3;
  const double var = centered.squaredNorm() / 4.0;
  CHECK(latent_eps2(centered, 0.2) == doctest::Approx(0.04 * var));

  const LatentState zero(Vector::Zero(3), 0.1);
  CHECK(zero.eps2 == doctest::Approx(1e-12));
  LatentState s(Vector::Ones(4), 0.1);
  CHECK(s.eps2 == doctest::Approx(0.01));
  s.zbar *= 2.0;
  s.refresh();
  CHECK(s.eps2 == doctest::Approx(0.04));
  CHECK_THROWS_AS(LatentState(Vector::Ones(3), 0.0), InvalidArgument);
  CHECK_THROWS_AS(LatentState(Vector::Ones(3), 1.0), InvalidArgument);
}

TEST_CASE("conditional statistics") {
  std::mt19937_64 gen(40);
  const Matrix x = oracle::random_matrix(gen, 8, 3);

  const LatentState flat(Vector::Constant(8, 0.7), 0.1);
  const Vector mean = x.colwise().mean();
  const double rms = std::sqrt((x.rowwise() - mean.transpose()).rowwise().squaredNorm().mean());
  for (double z : {-3.0, 0.7, 5.0}) {
    const ConditionalStats cs = conditional_stats(z, x, flat);
    CHECK((cs.mean - mean).norm() < 1e-12);
    CHECK(cs.std_dev == doctest::Approx(rms).epsilon(1e-12));
  }

  Vector groups(8);
  groups << 0, 0, 0, 0, 10, 10, 10, 10;
  const LatentState far(groups, 0.1);
  const ConditionalStats at0 = conditional_stats(0.0, x, far);
  for (int i = 4; i < 8; ++i) CHECK(at0.bayes(i) < 1e-6);

  for (int rep = 0; rep < 20; ++rep) {
    const LatentState st(oracle::random_matrix(gen, 8, 1), 0.3);
    const double z = oracle::uniform(gen, -2.0, 2.0);
    const ConditionalStats cs = conditional_stats(z, x, st);
    CHECK(std::abs(cs.bayes.sum() - 1.0) <= 1e-12);
    CHECK(cs.std_dev == doctest::Approx(oracle::conditional_std(x, st.zbar, st.eps2, z)).epsilon(1e-10));
    double direct = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double e = std::exp(-(z - st.zbar(i)) * (z - st.zbar(i)) / (2 * st.eps2)) /
                       std::sqrt(2 * std::numbers::pi * st.eps2);
      CHECK(cs.likelihood(i) == doctest::Approx(e).epsilon(1e-12));
      direct += e / 8.0;
    }
    CHECK(cs.density == doctest::Approx(direct).epsilon(1e-12));
    const double var = ((x.rowwise() - cs.mean.transpose()).rowwise().squaredNorm().array() *
                        cs.bayes.array()).sum();
    CHECK(cs.std_dev * cs.std_dev == doctest::Approx(var).epsilon(1e-12));
  }

  // Far from every latent mean the plain densities underflow; the log domain
  // keeps the Bayes weights well defined.
  const ConditionalStats remote = conditional_stats(1e3, x, far);
  CHECK(remote.density == 0.0);
  CHECK(std::isfinite(remote.log_density));
  CHECK(std::abs(remote.bayes.sum() - 1.0) <= 1e-12);
  CHECK_THROWS_AS(conditional_stats(std::nan(""), x, far), NumericalError);
}

TEST_CASE("expected gradient matches finite differences of the direct integral") {
  std::mt19937_64 gen(41);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 6 + rep % 7;
    const Matrix x = oracle::random_matrix(gen, n, 2);
    const Vector zbar = oracle::random_matrix(gen, n, 1);
    const double alpha = 0.3;
    const Vector g = expected_gradient(x, LatentState(zbar, alpha), 801);
    const Vector fd = oracle::sigma_fd(x, zbar, alpha, 1e-5);
    CHECK(oracle::cosine(g, fd) >= 0.99);
    CHECK((g - fd).norm() <= 1e-3 * fd.norm());
  }
}

TEST_CASE("the typeset correction term does not match finite differences") {
  std::mt19937_64 gen(42);
  int mismatched = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix x = oracle::random_matrix(gen, 8, 2);
    const Vector zbar = 3.0 * oracle::random_matrix(gen, 8, 1);
    const Vector typeset = expected_gradient(x, LatentState(zbar, 0.3), 801, GradientForm::kTypeset);
    const Vector fd = oracle::sigma_fd(x, zbar, 0.3, 1e-5);
    if ((typeset - fd).norm() > 1e-2 * fd.norm()) ++mismatched;
  }
  CHECK(mismatched == 5);
}

TEST_CASE("expected gradient is orthogonal to the latent vector") {
  std::mt19937_64 gen(43);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = oracle::random_matrix(gen, 12, 3);
    const LatentState st(oracle::random_matrix(gen, 12, 1), 0.1);
    const Vector g = expected_gradient(x, st, 801);
    CHECK(std::abs(g.dot(st.zbar)) <= 1e-6 * g.norm() * st.zbar.norm());
  }
}

TEST_CASE("gradient is translation invariant in the data and antisymmetric under mirroring") {
  std::mt19937_64 gen(44);
  const Matrix x = oracle::random_matrix(gen, 10, 2);
  const LatentState st(oracle::random_matrix(gen, 10, 1), 0.2);
  const Matrix shifted = x.rowwise() + Eigen::RowVector2d(5.0, -3.0);
  for (double z : {-0.5, 0.0, 0.3}) {
    const Vector a = afd_gradient(z, x, st);
    CHECK((afd_gradient(z, shifted, st) - a).norm() <= 1e-9 * a.norm());
  }

  const int half = 5;
  Matrix m(2 * half, 2);
  Vector zbar(2 * half);
  for (int i = 0; i < half; ++i) {
    m(i, 0) = oracle::uniform(gen, 0.2, 2.0);
    m(i, 1) = oracle::uniform(gen, -1.0, 1.0);
    m(i + half, 0) = -m(i, 0);
    m(i + half, 1) = m(i, 1);
    zbar(i) = oracle::uniform(gen, 0.1, 1.5);
    zbar(i + half) = -zbar(i);
  }
  const LatentState mirror(zbar, 0.2);
  for (double z : {0.2, 0.9}) {
    const Vector gp = afd_gradient(z, m, mirror);
    const Vector gm = afd_gradient(-z, m, mirror);
    for (int i = 0; i < half; ++i) {
      CHECK(gm(i + half) == doctest::Approx(-gp(i)).epsilon(1e-9));
      CHECK(gm(i) == doctest::Approx(-gp(i + half)).epsilon(1e-9));
    }
  }
}

TEST_CASE("rescaling the latent vector rescales the bandwidth only") {
  std::mt19937_64 gen(45);
  const Matrix x = oracle::random_matrix(gen, 9, 2);
  const Vector zbar = oracle::random_matrix(gen, 9, 1);
  const LatentState a(zbar, 0.2);
  const LatentState b(3.0 * zbar, 0.2);
  CHECK(std::sqrt(b.eps2) == doctest::Approx(3.0 * std::sqrt(a.eps2)));
  for (double z : {-1.0, 0.1, 0.8}) {
    CHECK((conditional_stats(z, x, a).bayes - conditional_stats(3.0 * z, x, b).bayes).norm() < 1e-12);
  }
  CHECK(sigma_quadrature(x, b) == doctest::Approx(sigma_quadrature(x, a)).epsilon(1e-10));
}

TEST_CASE("sigma quadrature: constant integrand, refinement and Monte Carlo") {
  std::mt19937_64 gen(46);
  const Matrix x = oracle::random_matrix(gen, 10, 2);
  const Vector mean = x.colwise().mean();
  const double rms = std::sqrt((x.rowwise() - mean.transpose()).rowwise().squaredNorm().mean());
  CHECK(sigma_quadrature(x, LatentState(Vector::Constant(10, 2.0), 0.1)) ==
        doctest::Approx(rms).epsilon(1e-6));

  const LatentState st(oracle::random_matrix(gen, 10, 1), 0.1);
  const double coarse = sigma_quadrature(x, st, 401);
  const double fine = sigma_quadrature(x, st, 801);
  CHECK(std::abs(coarse - fine) <= 1e-6 * fine);
  CHECK(fine == doctest::Approx(oracle::sigma_integral(x, st.zbar, 0.1)).epsilon(1e-6));

  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 9);
  const double eps = std::sqrt(st.eps2);
  const int draws = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < draws; ++t) {
    const double z = st.zbar(pick(gen)) + eps * nd(gen);
    const double v = oracle::conditional_std(x, st.zbar, st.eps2, z);
    sum += v;
    sum2 += v * v;
  }
  const double mc = sum / draws;
  const double se = std::sqrt((sum2 / draws - mc * mc) / draws);
  CHECK(std::abs(mc - fine) <= 3.0 * se);

  CHECK_THROWS_AS(sigma_quadrature(x, st, 400), InvalidArgument);
  CHECK_THROWS_AS(sigma_quadrature(x, st, 1), InvalidArgument);
  CHECK_THROWS_AS(sigma_quadrature(x.topRows(5), st), InvalidArgument);
}

TEST_CASE("exact line data parameterized by arc length is nearly stationary") {
  // The bandwidth must exceed the sample spacing for the kernel sum to be smooth.
  const int n = 400;
  Matrix x(n, 2);
  Vector zbar(n);
  const Eigen::Vector2d dir = Eigen::Vector2d(3, 4) / 5.0;
  for (int i = 0; i < n; ++i) {
    const double s = -1.0 + 2.0 * i / (n - 1);
    x.row(i) = (s * dir).transpose();
    zbar(i) = s;
  }
  const LatentState st(zbar, 0.025);
  CHECK(expected_gradient(x, st, 4001).norm() <= 1e-3 * zbar.norm());
}

TEST_CASE("initial latent means") {
  std::mt19937_64 gen(47);
  Vector u;
  const Matrix x = noisy_line(gen, 50, 0.01, &u);
  AfdConfig cfg;
  cfg.alpha = 0.05;
  cfg.init_eps = 0.5;
  const Vector pc1 = initial_zbar(x, cfg);
  CHECK(std::abs(pc1.mean()) < 1e-9);
  CHECK(kendall_tau(pc1, u) > 0.95);
  CHECK(LatentState(pc1, cfg.alpha).eps2 == doctest::Approx(0.25));
  cfg.init = Init::kRandom;
  cfg.seed = 5;
  const Vector r = initial_zbar(x, cfg);
  CHECK(r == initial_zbar(x, cfg));
  CHECK(r.cwiseAbs().maxCoeff() <= 1.0);
  CHECK_THROWS_AS(initial_zbar(x.topRows(1), cfg), InvalidArgument);
}

TEST_CASE("factor discovery orders noisy line data and is deterministic") {
  std::mt19937_64 gen(48);
  Vector u;
  const Matrix x = noisy_line(gen, 100, 0.05, &u);
  AfdConfig cfg;
  cfg.iters = 3000;
  cfg.eval_every = 500;
  cfg.quad_nodes = 201;
  cfg.seed = 3;
  const AfdResult r = run_afd(x, cfg);
  CHECK_FALSE(r.diverged);
  CHECK(r.iterations == 3000);
  CHECK(r.trace_iters == std::vector<int>{0, 500, 1000, 1500, 2000, 2500, 3000});
  CHECK(std::abs(kendall_tau(r.state.zbar, u)) >= 0.95);
  CHECK(r.state.eps2 == doctest::Approx(latent_eps2(r.state.zbar, cfg.alpha)));
  const AfdResult again = run_afd(x, cfg);
  CHECK(again.state.zbar == r.state.zbar);
  CHECK(again.sigma_trace == r.sigma_trace);

  const auto curve = principal_curve(x, r.state, 25);
  REQUIRE(curve.size() == 25);
  for (std::size_t j = 1; j < curve.size(); ++j) CHECK(curve[j].z > curve[j - 1].z);
  for (const auto& p : curve) {
    // Distance to the line y = x / 2.
    CHECK(std::abs(p.mean(1) - 0.5 * p.mean(0)) / std::sqrt(1.25) <= 0.1);
  }
}

TEST_CASE("separated branches give separated latent groups") {
  std::mt19937_64 gen(49);
  std::normal_distribution<double> nd(0.0, 0.05);
  const int per = 60;
  Matrix x(2 * per, 2);
  for (int i = 0; i < per; ++i) {
    const double u = oracle::uniform(gen, 0.0, 1.0);
    x(i, 0) = u + nd(gen);
    x(i, 1) = nd(gen);
    const double v = oracle::uniform(gen, 0.0, 1.0);
    x(i + per, 0) = 3.0 + nd(gen);
    x(i + per, 1) = 2.0 + v + nd(gen);
  }
  AfdConfig cfg;
  cfg.iters = 5000;
  cfg.eval_every = 1000;
  cfg.quad_nodes = 201;
  const AfdResult r = run_afd(x, cfg);
  REQUIRE_FALSE(r.diverged);
  std::vector<double> z(r.state.zbar.data(), r.state.zbar.data() + r.state.zbar.size());
  std::sort(z.begin(), z.end());
  std::vector<double> gaps;
  for (std::size_t i = 1; i < z.size(); ++i) gaps.push_back(z[i] - z[i - 1]);
  std::vector<double> sorted = gaps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  CHECK(*std::max_element(gaps.begin(), gaps.end()) > 20.0 * median);
  CHECK(*std::max_element(gaps.begin(), gaps.end()) > 4.0 * std::sqrt(r.state.eps2));
}

TEST_CASE("principal curve contract") {
  std::mt19937_64 gen(50);
  const Matrix x = oracle::random_matrix(gen, 12, 3);
  const Vector mean = x.colwise().mean();
  const auto flat = principal_curve(x, LatentState(Vector::Constant(12, -1.0), 0.1), 7);
  REQUIRE(flat.size() == 7);
  for (std::size_t j = 0; j < flat.size(); ++j) {
    CHECK((flat[j].mean - mean).norm() < 1e-12);
    if (j > 0) CHECK(flat[j].z > flat[j - 1].z);
  }
  CHECK_THROWS_AS(principal_curve(x, LatentState(Vector::Ones(12), 0.1), 0), InvalidArgument);
}

TEST_CASE("divergent step sizes are detected") {
  std::mt19937_64 gen(51);
  const Matrix x = noisy_line(gen, 30, 0.05);
  AfdConfig cfg;
  cfg.eta = 1e14;
  cfg.iters = 100;
  cfg.eval_every = 10;
  cfg.quad_nodes = 101;
  const AfdResult r = run_afd(x, cfg);
  CHECK(r.diverged);
  CHECK(r.iterations < 100);
  CHECK(std::isfinite(r.state.zbar.norm()));
  CHECK_FALSE(r.sigma_trace.empty());
}
