#pragma once

#include "oraclab/evaluation.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace oraclab {

inline constexpr const char* kMetricsHeader =
    "step,episode,mean_reward,mean_cost,cvar_cost,lambda,entropy_temp,delta,path_short,path_long,path_none";

struct MetricsRow {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  double mean_reward = 0.0;
  double mean_cost = 0.0;
  double cvar_cost = 0.0;
  double lambda = 0.0;
  double entropy_temp = 0.0;
  double delta = 0.0;
  int path_short = 0;
  int path_long = 0;
  int path_none = 0;

  static MetricsRow from_report(const EvalReport& report, std::int64_t episode, double lambda, double entropy_temp,
                                double delta);
  /// One CSV line without the newline. Reals use round-trip precision.
  std::string to_csv() const;
};

/// Creates the file with only the header line (replacing any content).
void metrics_init(const std::filesystem::path& path);

/// Appends one row by writing a sibling temp file and renaming it over the
/// original, so readers see either the old or the new file, never a torn row.
void metrics_append(const std::filesystem::path& path, const MetricsRow& row);

/// Atomic whole-file write used for config and result files.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace oraclab
