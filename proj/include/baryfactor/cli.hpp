#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "baryfactor/common.hpp"

/// File formats and the `baryfactor` command-line front end.
namespace baryfactor::cli {

struct CsvData {
  Matrix data;
  /// 0-based labels when a label column was requested; the distinct values
  /// found in the file, sorted, map to 0 .. k-1.
  std::optional<Labels> labels;
  int k = 0;
  /// Original label value for each 0-based label.
  std::vector<long long> label_values;
  /// Names of the data columns (empty without a header line).
  std::vector<std::string> header;
};

/// Reads a comma-separated numeric table.  `label_column` is a header name
/// (when `has_header`) or a 0-based column index.
CsvData load_csv(const std::string& path, bool has_header,
                 const std::optional<std::string>& label_column = std::nullopt);

/// Writes data with an optional trailing 1-based label column.  Numbers use
/// the shortest representation that reads back to the same double.
void write_csv(const std::string& path, const Matrix& data,
               const std::optional<Labels>& labels = std::nullopt,
               const std::vector<std::string>& header = {});

std::string format_double(double v);

struct RunRecord {
  std::string algorithm;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<double> trace;
  double objective = 0.0;
  /// Exactly one of these is set.
  std::optional<Labels> labels;
  std::optional<Matrix> assignment;
  double wall_ms = 0.0;
  int restart = 0;
  int iterations = 0;
  bool converged = false;
};

/// Labels are stored 1-based in JSON.
nlohmann::json to_json(const RunRecord& rec);
RunRecord record_from_json(const nlohmann::json& j);

/// Entry point of the executable.  Returns the process exit code; results go
/// to files or `out`, diagnostics to `err`.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace baryfactor::cli
