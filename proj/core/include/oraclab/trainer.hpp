#pragma once

// The interleaved act / store / learn loop with periodic evaluation.
//
// A run writes into "<run_dir>.partial" and is renamed to <run_dir> only on
// success:
//   config.json            echoed RunConfig
//   metrics.csv            one row per evaluation
//   checkpoints/step_<N>   parameter archives
//   result.json            final evaluation report

#include "oraclab/agent.hpp"
#include "oraclab/config.hpp"
#include "oraclab/evaluation.hpp"
#include "oraclab/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

namespace oraclab {

struct TrainResult {
  std::filesystem::path run_dir;
  EvalReport final_report;
  std::int64_t episodes = 0;
  std::int64_t gradient_steps = 0;
  std::int64_t faults = 0;
  bool converged = false;
  std::int64_t steps_to_convergence = -1;
};

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_eval;
};

TrainResult train(const RunConfig& config, const std::filesystem::path& run_dir, const TrainHooks& hooks = {});

/// Serialises a report (episode lists included).
std::string report_to_json(const EvalReport& report);

/// Evaluation seed for the i-th evaluation of a run.
std::uint64_t eval_seed(const RunConfig& config, std::int64_t eval_index);

}  // namespace oraclab
