#include "baryfactor/eval.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "baryfactor/rng.hpp"

namespace baryfactor::eval {

namespace {

struct Component {
  Eigen::Vector2d mean;
  Eigen::Vector2d std_dev;
  int size;
};

LabeledDataSet sample(const std::vector<Component>& parts, std::uint64_t seed) {
  Rng rng(seed);
  int total = 0;
  for (const auto& p : parts) total += p.size;
  LabeledDataSet out;
  out.data.resize(total, 2);
  out.labels.reserve(static_cast<std::size_t>(total));
  out.k = static_cast<int>(parts.size());
  int row = 0;
  for (int k = 0; k < out.k; ++k) {
    const auto& p = parts[static_cast<std::size_t>(k)];
    for (int i = 0; i < p.size; ++i, ++row) {
      for (int c = 0; c < 2; ++c) out.data(row, c) = p.mean(c) + p.std_dev(c) * rng.normal();
      out.labels.push_back(k);
    }
  }
  return out;
}

void check_t(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be a finite nonnegative number");
}

int label_count(const Labels& labels, const char* what) {
  int top = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      std::ostringstream os;
      os << what << " label " << labels[i] << " at row " << i << " is negative";
      throw InvalidArgument(os.str());
    }
    top = std::max(top, labels[i]);
  }
  return top + 1;
}

double matched_overlap(const Matrix& overlap) {
  const Eigen::Index n = std::max(overlap.rows(), overlap.cols());
  Matrix square = Matrix::Zero(n, n);
  square.topLeftCorner(overlap.rows(), overlap.cols()) = overlap;
  const std::vector<int> match = max_weight_matching(square);
  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) total += square(r, match[static_cast<std::size_t>(r)]);
  return total;
}

}  // namespace

LabeledDataSet gen_expansion(double t, std::uint64_t seed) {
  check_t(t);
  const double r0 = std::sqrt(0.1);
  const double x3 = (t + 1.0) / (t + 2.0) * std::sqrt(12.0 * (2.0 * t + 1.0));
  const double y3 = 2.0 * (1.0 - t * t) / (t + 2.0);
  return sample({{{0.0, 0.0}, {r0, r0}, 100},
                 {{0.0, 2.0 + t}, {r0 * (1.0 + t), r0 * (1.0 + t)},
                  static_cast<int>(std::lround(100.0 * (1.0 + t)))},
                 {{x3, y3}, {r0 * (1.0 + 2.0 * t), r0 * (1.0 + 2.0 * t)},
                  static_cast<int>(std::lround(100.0 * (1.0 + 2.0 * t)))}},
                seed);
}

LabeledDataSet gen_dilation(double t, std::uint64_t seed) {
  check_t(t);
  const double wide = (1.0 + t) / 5.0;
  return sample({{{0.0, 1.0}, {wide, 0.2}, 100},
                 {{0.0, 0.0}, {0.2, 0.2}, 100},
                 {{0.0, -1.0}, {wide, 0.2}, 100}},
                seed);
}

std::vector<int> max_weight_matching(const Matrix& weights) {
  if (weights.rows() != weights.cols()) throw InvalidArgument("matching needs a square matrix");
  const int n = static_cast<int>(weights.rows());
  if (n == 0) return {};
  // Hungarian method with potentials on the cost max(w) - w; 1-based arrays.
  const double top = weights.maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - weights(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) match[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return match;
}

double correctness_rate(const Labels& truth, const Labels& pred) {
  if (truth.size() != pred.size() || truth.empty()) {
    throw InvalidArgument("correctness_rate: label vectors must be nonempty and of equal length");
  }
  const int kt = label_count(truth, "true");
  const int kp = label_count(pred, "predicted");
  Matrix overlap = Matrix::Zero(kt, kp);
  for (std::size_t i = 0; i < truth.size(); ++i) overlap(truth[i], pred[i]) += 1.0;
  return matched_overlap(overlap) / static_cast<double>(truth.size());
}

double correctness_rate(const Labels& truth, const Matrix& assignment) {
  if (static_cast<Eigen::Index>(truth.size()) != assignment.rows() || truth.empty()) {
    throw InvalidArgument("correctness_rate: one assignment row per true label required");
  }
  const int kt = label_count(truth, "true");
  Matrix overlap = Matrix::Zero(kt, assignment.cols());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    overlap.row(truth[i]) += assignment.row(static_cast<Eigen::Index>(i));
  }
  return matched_overlap(overlap) / static_cast<double>(truth.size());
}

Matrix normalize_columns(const Matrix& data) {
  if (data.rows() < 2) throw InvalidArgument("normalize_columns: need at least two samples");
  Matrix out = data.rowwise() - data.colwise().mean();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double sd = std::sqrt(out.col(c).squaredNorm() / static_cast<double>(out.rows()));
    if (data.col(c).maxCoeff() > data.col(c).minCoeff() && sd > 0.0) {
      out.col(c) /= sd;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

}  // namespace baryfactor::eval
