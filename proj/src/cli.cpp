#include "baryfactor/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "baryfactor/cluster.hpp"
#include "baryfactor/eval.hpp"
#include "baryfactor/factor.hpp"
#include "baryfactor/gaussbary.hpp"

namespace baryfactor::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    std::ostringstream os;
    os << "non-numeric cell '" << s << "' at row " << row << ", column " << col;
    throw InvalidArgument(os.str());
  }
  return v;
}

long long parse_label(const std::string& raw, std::size_t row, std::size_t col) {
  const double v = parse_double(raw, row, col);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    std::ostringstream os;
    os << "label '" << trim(raw) << "' at row " << row << ", column " << col << " is not an integer";
    throw InvalidArgument(os.str());
  }
  return static_cast<long long>(v);
}

std::size_t resolve_label_column(const std::string& spec, const std::vector<std::string>& names,
                                 std::size_t width) {
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (trim(names[c]) == spec) return c;
  }
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), idx);
  if (ec != std::errc() || ptr != spec.data() + spec.size() || idx >= width) {
    throw InvalidArgument("label column '" + spec + "' is neither a header name nor a column index");
  }
  return idx;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw InvalidArgument(std::string(what) + " must be a nonempty array of rows");
  }
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.front().size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j.front().size()) throw InvalidArgument(std::string(what) + " is ragged");
    for (std::size_t c = 0; c < j[i].size(); ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_json(const std::string& path, const json& j, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
  f << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw InvalidArgument("malformed JSON in '" + path + "': " + e.what());
  }
}

struct InputOptions {
  std::string path;
  bool header = false;
  std::string label_column;
  bool normalize = false;

  void attach(CLI::App* app) {
    app->add_option("--in", path, "Input CSV")->required();
    app->add_flag("--header", header, "The first line holds column names");
    app->add_option("--label-column", label_column, "Label column (name or 0-based index)");
    app->add_flag("--normalize", normalize, "Standardize every column before use");
  }

  CsvData load() const {
    CsvData d = load_csv(path, header,
                         label_column.empty() ? std::nullopt : std::optional(label_column));
    if (normalize) d.data = eval::normalize_columns(d.data);
    return d;
  }
};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct ClusterCommand {
  InputOptions input;
  std::string algo;
  std::string out_path;
  int k = 0;
  double fuzzy_c = 2.0;
  cluster::ClusterConfig cfg;
  std::optional<double> eps_cov;
  std::optional<double> eps_sigma;

  void attach(CLI::App* app) {
    input.attach(app);
    app->add_option("--algo", algo, "Algorithm")
        ->required()
        ->check(CLI::IsMember({"kmeans", "fuzzy-kmeans", "bary-soft", "bary-hard", "bary-kmeans",
                               "bary-iso-soft"}));
    app->add_option("--k", k, "Number of clusters")->required()->check(CLI::Range(2, 1 << 20));
    app->add_option("--out", out_path, "RunRecord JSON ('-' for standard output)");
    app->add_option("--seed", cfg.seed, "Base seed; restart r uses seed + r");
    app->add_option("--restarts", cfg.restarts, "Independent restarts")->check(CLI::PositiveNumber);
    app->add_option("--max-iters", cfg.max_iters, "Iteration cap per restart")->check(CLI::NonNegativeNumber);
    app->add_option("--tol", cfg.tol, "Relative objective change that stops soft descent");
    app->add_option("--step", cfg.step, "Initial line-search step")->check(CLI::PositiveNumber);
    app->add_option("--update-rate", cfg.update_rate, "Statistics update rate of hard algorithms");
    app->add_option("--eps-cov", eps_cov, "Covariance ridge");
    app->add_option("--eps-sigma", eps_sigma, "Standard-deviation guard");
    app->add_option("--fuzzy-c", fuzzy_c, "Fuzzy k-means exponent")->check(CLI::Range(1.0 + 1e-12, 1e6));
    app->add_option("--threads", cfg.threads, "Threads for restarts")->check(CLI::PositiveNumber);
  }

  int run(std::ostream& out) {
    const CsvData d = input.load();
    cfg.eps_cov = eps_cov;
    cfg.eps_sigma = eps_sigma;
    const cluster::Regularizers reg = cluster::resolve_regularizers(d.data, cfg);
    cfg.eps_cov = reg.eps_cov;
    cfg.eps_sigma = reg.eps_sigma;

    RunRecord rec;
    rec.algorithm = algo;
    rec.seed = cfg.seed;
    const auto t0 = Clock::now();
    auto take_soft = [&](cluster::SoftResult r) {
      rec.trace = std::move(r.trace);
      rec.objective = r.objective;
      rec.assignment = std::move(r.assignment);
      rec.restart = r.restart;
      rec.iterations = r.iterations;
      rec.converged = r.converged;
    };
    auto take_hard = [&](cluster::HardResult r) {
      rec.trace = std::move(r.trace);
      rec.objective = r.objective;
      rec.labels = std::move(r.labels);
      rec.restart = r.restart;
      rec.iterations = r.iterations;
      rec.converged = r.converged;
    };
    if (algo == "kmeans") {
      take_hard(cluster::kmeans(d.data, k, cfg));
    } else if (algo == "fuzzy-kmeans") {
      take_soft(cluster::fuzzy_kmeans(d.data, k, fuzzy_c, cfg));
    } else if (algo == "bary-soft") {
      take_soft(cluster::run_soft(d.data, k, cluster::Mode::kGeneral, cfg));
    } else if (algo == "bary-iso-soft") {
      take_soft(cluster::run_soft(d.data, k, cluster::Mode::kIsotropic, cfg));
    } else if (algo == "bary-hard") {
      take_hard(cluster::run_hard(d.data, k, cluster::Mode::kGeneral, cfg));
    } else {
      take_hard(cluster::run_hard(d.data, k, cluster::Mode::kIsotropic, cfg));
    }
    rec.wall_ms = elapsed_ms(t0);
    rec.config = {{"algo", algo},
                  {"k", k},
                  {"seed", cfg.seed},
                  {"restarts", cfg.restarts},
                  {"max_iters", cfg.max_iters},
                  {"tol", cfg.tol},
                  {"step", cfg.step},
                  {"armijo_alpha", cfg.armijo_alpha},
                  {"armijo_beta", cfg.armijo_beta},
                  {"update_rate", cfg.update_rate},
                  {"eps_cov", reg.eps_cov},
                  {"eps_sigma", reg.eps_sigma},
                  {"fuzzy_c", fuzzy_c},
                  {"normalize", input.normalize},
                  {"input", input.path},
                  {"header", input.header},
                  {"label_column", input.label_column}};

    json j = to_json(rec);
    if (d.labels) {
      j["correctness"] = rec.labels ? eval::correctness_rate(*d.labels, *rec.labels)
                                    : eval::correctness_rate(*d.labels, *rec.assignment);
      if (rec.assignment) {
        j["correctness_argmax"] =
            eval::correctness_rate(*d.labels, cluster::argmax_labels(*rec.assignment));
      }
    }
    write_json(out_path, j, out);
    return 0;
  }
};

struct FactorCommand {
  InputOptions input;
  factor::AfdConfig cfg;
  std::string init = "pc1";
  std::string curve_path;
  std::string out_path;
  int points = 200;

  void attach(CLI::App* app) {
    input.attach(app);
    app->add_option("--alpha", cfg.alpha, "Proportion constant")->check(CLI::Range(1e-12, 1.0 - 1e-12));
    app->add_option("--eta", cfg.eta, "Learning rate")->check(CLI::PositiveNumber);
    app->add_option("--iters", cfg.iters, "Iterations")->check(CLI::NonNegativeNumber);
    app->add_option("--seed", cfg.seed, "Seed");
    app->add_option("--init", init, "Initial latent means")->check(CLI::IsMember({"pc1", "random"}));
    app->add_option("--init-eps", cfg.init_eps, "Bandwidth of the pc1 start")->check(CLI::PositiveNumber);
    app->add_option("--eval-every", cfg.eval_every, "Iterations between sigma evaluations")
        ->check(CLI::PositiveNumber);
    app->add_option("--curve", curve_path, "Principal-curve CSV (z, conditional mean)");
    app->add_option("--points", points, "Curve points")->check(CLI::PositiveNumber);
    app->add_option("--out", out_path, "Latent state and sigma trace as JSON");
  }

  int run(std::ostream& out) {
    const CsvData d = input.load();
    cfg.init = init == "random" ? factor::Init::kRandom : factor::Init::kPc1;
    const auto t0 = Clock::now();
    const factor::AfdResult r = factor::run_afd(d.data, cfg);
    const double ms = elapsed_ms(t0);
    if (!curve_path.empty()) {
      const auto curve = factor::principal_curve(d.data, r.state, points);
      Matrix rows(static_cast<Eigen::Index>(curve.size()), d.data.cols() + 1);
      for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        rows(row, 0) = curve[i].z;
        rows.row(row).tail(d.data.cols()) = curve[i].mean.transpose();
      }
      std::vector<std::string> header{"z"};
      for (Eigen::Index c = 0; c < d.data.cols(); ++c) {
        header.push_back(d.header.empty() ? "x" + std::to_string(c + 1)
                                          : d.header[static_cast<std::size_t>(c)]);
      }
      write_csv(curve_path, rows, std::nullopt, header);
    }
    json j = {{"algorithm", "affine-factor-discovery"},
              {"seed", cfg.seed},
              {"config",
               {{"alpha", cfg.alpha},
                {"eta", cfg.eta},
                {"iters", cfg.iters},
                {"init", init},
                {"init_eps", cfg.init_eps},
                {"eval_every", cfg.eval_every},
                {"quad_nodes", cfg.quad_nodes},
                {"normalize", input.normalize},
                {"input", input.path}}},
              {"trace_iters", r.trace_iters},
              {"sigma_trace", r.sigma_trace},
              {"objective", r.sigma_trace.back()},
              {"iterations", r.iterations},
              {"diverged", r.diverged},
              {"eps2", r.state.eps2},
              {"zbar", vector_json(r.state.zbar)},
              {"wall_ms", ms}};
    if (!out_path.empty() || curve_path.empty()) write_json(out_path, j, out);
    if (r.diverged) throw NumericalError("affine factor discovery diverged (latent norm grew more than 1e6 times)");
    return 0;
  }
};

Labels labels_from_json(const json& j) {
  Labels out;
  for (const auto& v : j) out.push_back(v.get<int>() - 1);
  return out;
}

}  // namespace

CsvData load_csv(const std::string& path, bool has_header,
                 const std::optional<std::string>& label_column) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::vector<std::string> names;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (has_header && names.empty() && rows.empty() && line_no == 1) {
      names = split_row(line);
      for (auto& n : names) n = trim(n);
      continue;
    }
    rows.push_back(split_row(line));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw InvalidArgument("'" + path + "' contains no data rows");
  const std::size_t width = has_header && !names.empty() ? names.size() : rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      std::ostringstream os;
      os << "ragged row at line " << line_numbers[r] << ": expected " << width << " cells, found "
         << rows[r].size();
      throw InvalidArgument(os.str());
    }
  }
  std::optional<std::size_t> label_col;
  if (label_column) label_col = resolve_label_column(*label_column, names, width);
  const std::size_t d = width - (label_col ? 1 : 0);
  if (d == 0) throw InvalidArgument("no data columns left after removing the label column");

  CsvData out;
  out.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  std::vector<long long> raw_labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index c_out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (label_col && c == *label_col) {
        raw_labels.push_back(parse_label(rows[r][c], line_numbers[r], c));
      } else {
        out.data(static_cast<Eigen::Index>(r), c_out++) = parse_double(rows[r][c], line_numbers[r], c);
      }
    }
  }
  if (!names.empty()) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (!label_col || c != *label_col) out.header.push_back(names[c]);
    }
  }
  if (label_col) {
    out.label_values = raw_labels;
    std::sort(out.label_values.begin(), out.label_values.end());
    out.label_values.erase(std::unique(out.label_values.begin(), out.label_values.end()),
                           out.label_values.end());
    std::map<long long, int> index;
    for (std::size_t i = 0; i < out.label_values.size(); ++i) {
      index[out.label_values[i]] = static_cast<int>(i);
    }
    Labels labels;
    labels.reserve(raw_labels.size());
    for (long long v : raw_labels) labels.push_back(index[v]);
    out.labels = std::move(labels);
    out.k = static_cast<int>(out.label_values.size());
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

void write_csv(const std::string& path, const Matrix& data, const std::optional<Labels>& labels,
               const std::vector<std::string>& header) {
  if (labels && static_cast<Eigen::Index>(labels->size()) != data.rows()) {
    throw InvalidArgument("write_csv: one label per row required");
  }
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) f << (c ? "," : "") << header[c];
    f << '\n';
  }
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) f << (c ? "," : "") << format_double(data(i, c));
    if (labels) f << ',' << (*labels)[static_cast<std::size_t>(i)] + 1;
    f << '\n';
  }
  if (!f) throw Error("write to '" + path + "' failed");
}

json to_json(const RunRecord& rec) {
  json j = {{"algorithm", rec.algorithm},
            {"seed", rec.seed},
            {"config", rec.config},
            {"trace", rec.trace},
            {"objective", rec.objective},
            {"wall_ms", rec.wall_ms},
            {"restart", rec.restart},
            {"iterations", rec.iterations},
            {"converged", rec.converged}};
  if (rec.labels) {
    std::vector<int> one_based(rec.labels->begin(), rec.labels->end());
    for (int& l : one_based) ++l;
    j["labels"] = one_based;
  }
  if (rec.assignment) j["assignment"] = matrix_json(*rec.assignment);
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord rec;
  try {
    rec.algorithm = j.at("algorithm").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.config = j.value("config", json::object());
    rec.trace = j.value("trace", std::vector<double>{});
    rec.objective = j.at("objective").get<double>();
    rec.wall_ms = j.value("wall_ms", 0.0);
    rec.restart = j.value("restart", 0);
    rec.iterations = j.value("iterations", 0);
    rec.converged = j.value("converged", false);
    if (j.contains("labels")) rec.labels = labels_from_json(j.at("labels"));
    if (j.contains("assignment")) rec.assignment = matrix_from_json(j.at("assignment"), "assignment");
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed run record: ") + e.what());
  }
  if (rec.labels.has_value() == rec.assignment.has_value()) {
    throw InvalidArgument("run record must hold either labels or an assignment matrix");
  }
  return rec;
}

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wasserstein barycenter clustering and affine factor discovery"};
  app.require_subcommand(1);

  std::string family;
  double t = 0.0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate an expansion or dilation benchmark");
  synth->add_option("family", family, "expansion or dilation")
      ->required()
      ->check(CLI::IsMember({"expansion", "dilation"}));
  synth->add_option("--t", t, "Deviation parameter")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out", synth_out, "Output CSV")->required();

  ClusterCommand cluster_cmd;
  cluster_cmd.attach(app.add_subcommand("cluster", "Cluster a CSV data set"));

  FactorCommand factor_cmd;
  factor_cmd.attach(app.add_subcommand("factor", "Affine factor discovery on a CSV data set"));

  std::string run_path;
  InputOptions truth;
  bool harden = false;
  auto* eval_app = app.add_subcommand("eval", "Correctness rate of a run against true labels");
  eval_app->add_option("--run", run_path, "RunRecord JSON")->required();
  eval_app->add_option("--truth", truth.path, "CSV with the true labels")->required();
  eval_app->add_flag("--header", truth.header, "The first line holds column names");
  eval_app->add_option("--label-column", truth.label_column, "Label column (name or 0-based index)")
      ->required();
  eval_app->add_flag("--argmax", harden, "Harden a soft assignment by row-wise argmax first");

  std::string bary_in;
  std::string bary_out;
  auto* bary = app.add_subcommand("bary", "Barycenter of Gaussians given as JSON");
  bary->add_option("--in", bary_in, "JSON {\"clusters\": [{\"weight\", \"mean\", \"cov\"}]}")->required();
  bary->add_option("--out", bary_out, "Output JSON (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth) {
      const eval::LabeledDataSet ds = family == "expansion" ? eval::gen_expansion(t, synth_seed)
                                                            : eval::gen_dilation(t, synth_seed);
      write_csv(synth_out, ds.data, ds.labels, {"x1", "x2", "label"});
      return 0;
    }
    if (*app.get_subcommand("cluster")) return cluster_cmd.run(out);
    if (*app.get_subcommand("factor")) return factor_cmd.run(out);
    if (*eval_app) {
      const RunRecord rec = record_from_json(read_json(run_path));
      const CsvData d = truth.load();
      double rate = 0.0;
      if (rec.labels) {
        rate = eval::correctness_rate(*d.labels, *rec.labels);
      } else if (harden) {
        rate = eval::correctness_rate(*d.labels, cluster::argmax_labels(*rec.assignment));
      } else {
        rate = eval::correctness_rate(*d.labels, *rec.assignment);
      }
      out << "correctness_rate " << format_double(rate) << '\n';
      return 0;
    }
    const json in = read_json(bary_in);
    std::vector<gaussbary::GaussianCluster> clusters;
    try {
      for (const auto& c : in.at("clusters")) {
        const std::vector<double> mean = c.at("mean").get<std::vector<double>>();
        gaussbary::GaussianCluster g;
        g.weight = c.at("weight").get<double>();
        g.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        g.cov = matcore::SymMatrix(matrix_from_json(c.at("cov"), "cov"));
        clusters.push_back(std::move(g));
      }
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("malformed Gaussian list: ") + e.what());
    }
    const gaussbary::BarycenterGaussian b = gaussbary::barycenter(clusters);
    write_json(bary_out,
               {{"mean", vector_json(b.mean)},
                {"cov", matrix_json(b.cov.matrix())},
                {"std", b.std_dev()},
                {"residual", b.residual},
                {"iterations", b.iterations}},
               out);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace baryfactor::cli
