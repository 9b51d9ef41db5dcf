#pragma once

#include <cstdint>

#include "baryfactor/common.hpp"

/// Synthetic benchmarks and the clustering correctness metric.
namespace baryfactor::eval {

struct LabeledDataSet {
  Matrix data;
  /// 0-based class labels (written 1-based to files).
  Labels labels;
  int k = 0;
};

/// Three touching spherical clusters whose radii and sizes grow with t:
/// covariances (1, (1+t)^2, (1+2t)^2) I / 10 and sizes 100, 100(1+t),
/// 100(1+2t).
LabeledDataSet gen_expansion(double t, std::uint64_t seed);

/// Three 100-point clusters stacked vertically at y = 1, 0, -1; the outer two
/// are stretched horizontally by a factor 1 + t.
LabeledDataSet gen_dilation(double t, std::uint64_t seed);

/// Largest fraction of samples whose predicted label maps to the true label
/// under a one-to-one relabeling (Hungarian assignment on the overlap
/// matrix).  Label counts may differ; unmatched labels score nothing.
double correctness_rate(const Labels& truth, const Labels& pred);
/// Soft version: sample i contributes P(i, g(z_i)).
double correctness_rate(const Labels& truth, const Matrix& assignment);

/// Maximum-weight perfect matching of a square matrix; returns col[row].
std::vector<int> max_weight_matching(const Matrix& weights);

/// Centers every column and scales it to unit population standard deviation.
/// Constant columns become zero.
Matrix normalize_columns(const Matrix& data);

}  // namespace baryfactor::eval
