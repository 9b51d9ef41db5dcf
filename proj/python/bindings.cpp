#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "baryfactor/cluster.hpp"
#include "baryfactor/eval.hpp"
#include "baryfactor/factor.hpp"
#include "baryfactor/gaussbary.hpp"

namespace py = pybind11;
using namespace baryfactor;

namespace {

py::array_t<int> to_array(const Labels& labels) {
  py::array_t<int> out(static_cast<py::ssize_t>(labels.size()));
  std::copy(labels.begin(), labels.end(), out.mutable_data());
  return out;
}

Labels to_labels(const py::array_t<int, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw InvalidArgument("labels must be one-dimensional");
  return Labels(a.data(), a.data() + a.size());
}

std::vector<gaussbary::GaussianCluster> to_clusters(const std::vector<double>& weights,
                                                    const std::vector<Vector>& means,
                                                    const std::vector<Matrix>& covs) {
  if (weights.size() != means.size() || weights.size() != covs.size()) {
    throw InvalidArgument("weights, means and covs must have the same length");
  }
  std::vector<gaussbary::GaussianCluster> out;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out.push_back({weights[k], means[k], matcore::SymMatrix::symmetrized(covs[k])});
  }
  return out;
}

py::dict soft_dict(const cluster::SoftResult& r) {
  py::dict d;
  d["assignment"] = r.assignment;
  d["labels"] = to_array(cluster::argmax_labels(r.assignment));
  d["objective"] = r.objective;
  d["trace"] = r.trace;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["restart"] = r.restart;
  return d;
}

py::dict hard_dict(const cluster::HardResult& r) {
  py::dict d;
  d["labels"] = to_array(r.labels);
  d["objective"] = r.objective;
  d["trace"] = r.trace;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["restart"] = r.restart;
  return d;
}

py::tuple dataset_tuple(const eval::LabeledDataSet& s) { return py::make_tuple(s.data, to_array(s.labels)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Barycentric clustering and affine factor discovery";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::enum_<cluster::Mode>(m, "Mode")
      .value("GENERAL", cluster::Mode::kGeneral)
      .value("ISOTROPIC", cluster::Mode::kIsotropic);

  py::class_<cluster::ClusterConfig>(m, "ClusterConfig")
      .def(py::init<>())
      .def_readwrite("seed", &cluster::ClusterConfig::seed)
      .def_readwrite("max_iters", &cluster::ClusterConfig::max_iters)
      .def_readwrite("restarts", &cluster::ClusterConfig::restarts)
      .def_readwrite("step", &cluster::ClusterConfig::step)
      .def_readwrite("eps_cov", &cluster::ClusterConfig::eps_cov)
      .def_readwrite("eps_sigma", &cluster::ClusterConfig::eps_sigma)
      .def_readwrite("update_rate", &cluster::ClusterConfig::update_rate)
      .def_readwrite("tol", &cluster::ClusterConfig::tol)
      .def_readwrite("enforce_standard", &cluster::ClusterConfig::enforce_standard)
      .def_readwrite("threads", &cluster::ClusterConfig::threads);

  m.def(
      "barycenter",
      [](const std::vector<double>& weights, const std::vector<Vector>& means, const std::vector<Matrix>& covs) {
        const auto b = gaussbary::barycenter(to_clusters(weights, means, covs));
        return py::make_tuple(b.mean, b.cov.matrix());
      },
      py::arg("weights"), py::arg("means"), py::arg("covs"),
      "Mean and covariance of the Wasserstein barycenter of Gaussians.");
  m.def(
      "isotropic_std",
      [](const std::vector<double>& sigmas, const std::vector<double>& weights) {
        return gaussbary::isotropic_std(sigmas, weights);
      },
      py::arg("sigmas"), py::arg("weights"));
  m.def(
      "w2_gaussian",
      [](const Vector& m1, const Matrix& c1, const Vector& m2, const Matrix& c2) {
        return gaussbary::w2_gaussian({1.0, m1, matcore::SymMatrix::symmetrized(c1)},
                                      {1.0, m2, matcore::SymMatrix::symmetrized(c2)});
      },
      py::arg("mean1"), py::arg("cov1"), py::arg("mean2"), py::arg("cov2"),
      "Squared 2-Wasserstein distance between two Gaussians.");

  m.def("grad_general", &cluster::grad_general, py::arg("data"), py::arg("assignment"),
        py::arg("config") = cluster::ClusterConfig{});
  m.def(
      "grad_isotropic",
      [](const Matrix& x, const Matrix& p, const cluster::ClusterConfig& cfg) {
        return cluster::grad_isotropic(x, p, cfg);
      },
      py::arg("data"), py::arg("assignment"), py::arg("config") = cluster::ClusterConfig{});
  m.def("project_simplex", &cluster::project_simplex, py::arg("v"));
  m.def("project_rows_simplex", &cluster::project_rows_simplex, py::arg("m"));

  m.def(
      "run_soft",
      [](const Matrix& x, int k, cluster::Mode mode, const cluster::ClusterConfig& cfg) {
        py::gil_scoped_release release;
        auto r = cluster::run_soft(x, k, mode, cfg);
        py::gil_scoped_acquire acquire;
        return soft_dict(r);
      },
      py::arg("data"), py::arg("k"), py::arg("mode") = cluster::Mode::kGeneral,
      py::arg("config") = cluster::ClusterConfig{});
  m.def(
      "run_hard",
      [](const Matrix& x, int k, cluster::Mode mode, const cluster::ClusterConfig& cfg) {
        py::gil_scoped_release release;
        auto r = cluster::run_hard(x, k, mode, cfg);
        py::gil_scoped_acquire acquire;
        return hard_dict(r);
      },
      py::arg("data"), py::arg("k"), py::arg("mode") = cluster::Mode::kIsotropic,
      py::arg("config") = cluster::ClusterConfig{});
  m.def(
      "kmeans",
      [](const Matrix& x, int k, const cluster::ClusterConfig& cfg) {
        py::gil_scoped_release release;
        auto r = cluster::kmeans(x, k, cfg);
        py::gil_scoped_acquire acquire;
        return hard_dict(r);
      },
      py::arg("data"), py::arg("k"), py::arg("config") = cluster::ClusterConfig{});
  m.def(
      "fuzzy_kmeans",
      [](const Matrix& x, int k, double c, const cluster::ClusterConfig& cfg) {
        py::gil_scoped_release release;
        auto r = cluster::fuzzy_kmeans(x, k, c, cfg);
        py::gil_scoped_acquire acquire;
        return soft_dict(r);
      },
      py::arg("data"), py::arg("k"), py::arg("c") = 2.0, py::arg("config") = cluster::ClusterConfig{});

  m.def(
      "run_afd",
      [](const Matrix& x, double alpha, double eta, int iters, std::uint64_t seed, const std::string& init,
         double init_eps, int eval_every) {
        factor::AfdConfig cfg;
        cfg.alpha = alpha;
        cfg.eta = eta;
        cfg.iters = iters;
        cfg.seed = seed;
        if (init == "pc1") {
          cfg.init = factor::Init::kPc1;
        } else if (init == "random") {
          cfg.init = factor::Init::kRandom;
        } else {
          throw InvalidArgument("init must be 'pc1' or 'random'");
        }
        cfg.init_eps = init_eps;
        cfg.eval_every = eval_every;
        factor::AfdResult r;
        {
          py::gil_scoped_release release;
          r = factor::run_afd(x, cfg);
        }
        py::dict d;
        d["zbar"] = r.state.zbar;
        d["alpha"] = r.state.alpha;
        d["eps2"] = r.state.eps2;
        d["trace_iters"] = r.trace_iters;
        d["sigma_trace"] = r.sigma_trace;
        d["iterations"] = r.iterations;
        d["diverged"] = r.diverged;
        return d;
      },
      py::arg("data"), py::arg("alpha") = 0.025, py::arg("eta") = 0.5, py::arg("iters") = 50000,
      py::arg("seed") = 0, py::arg("init") = "pc1", py::arg("init_eps") = 1.0, py::arg("eval_every") = 250);
  m.def(
      "sigma_quadrature",
      [](const Matrix& x, const Vector& zbar, double alpha, int nodes) {
        return factor::sigma_quadrature(x, factor::LatentState(zbar, alpha), nodes);
      },
      py::arg("data"), py::arg("zbar"), py::arg("alpha"), py::arg("nodes") = 801);
  m.def(
      "principal_curve",
      [](const Matrix& x, const Vector& zbar, double alpha, int points) {
        const auto curve = factor::principal_curve(x, factor::LatentState(zbar, alpha), points);
        Vector z(static_cast<Eigen::Index>(curve.size()));
        Matrix means(static_cast<Eigen::Index>(curve.size()), x.cols());
        for (std::size_t j = 0; j < curve.size(); ++j) {
          z(static_cast<Eigen::Index>(j)) = curve[j].z;
          means.row(static_cast<Eigen::Index>(j)) = curve[j].mean.transpose();
        }
        return py::make_tuple(z, means);
      },
      py::arg("data"), py::arg("zbar"), py::arg("alpha"), py::arg("points") = 100,
      "Latent values and conditional means along the principal curve.");

  m.def(
      "gen_expansion", [](double t, std::uint64_t seed) { return dataset_tuple(eval::gen_expansion(t, seed)); },
      py::arg("t"), py::arg("seed") = 0);
  m.def(
      "gen_dilation", [](double t, std::uint64_t seed) { return dataset_tuple(eval::gen_dilation(t, seed)); },
      py::arg("t"), py::arg("seed") = 0);
  m.def(
      "correctness_rate",
      [](const py::array_t<int, py::array::c_style | py::array::forcecast>& truth, const py::array& pred) {
        if (pred.ndim() == 2) {
          return eval::correctness_rate(to_labels(truth), pred.cast<Matrix>());
        }
        return eval::correctness_rate(to_labels(truth),
                                      to_labels(pred.cast<py::array_t<int, py::array::c_style |
                                                                             py::array::forcecast>>()));
      },
      py::arg("truth"), py::arg("pred"),
      "Best-relabeling agreement; pred is a label vector or an N x K assignment.");
  m.def("normalize_columns", &eval::normalize_columns, py::arg("data"));
}
