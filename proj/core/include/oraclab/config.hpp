#pragma once

// Run configuration shared by the trainer and the command line.
//
// Serialised as flat JSON whose keys are the long flag names without the
// leading dashes ("total-steps", "beta-r", ...). Defaults are the GuardedMaze
// hyper-parameters.

#include "oraclab/agent.hpp"
#include "oraclab/env.hpp"

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace oraclab {

/// Named random streams derived from the run seed.
namespace streams {
inline constexpr std::uint64_t kEnv = 0;
inline constexpr std::uint64_t kAction = 1;
inline constexpr std::uint64_t kBuffer = 2;
inline constexpr std::uint64_t kInit = 3;
}  // namespace streams

struct RunConfig {
  std::string env = "guardedmaze";
  std::string agent = "orac";
  std::uint64_t seed = 0;
  std::int64_t total_steps = 500'000;

  // Risk and constraint.
  double rho = 0.05;
  double cost_limit = 5.0;
  double cost_limit_scale = 1.0;
  std::string critic_mode = "fixed";
  double kappa = 1.0;

  // Environment.
  double guard_prob = 0.15;
  double step_scale = 1.0;

  // Exploration.
  double beta_r = 3.0;
  double beta_c = 2.0;
  double delta = 4.0;
  std::int64_t delta_horizon = 0;  // 0: total_steps

  // Networks.
  std::vector<int> policy_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  bool layer_norm = true;
  int quantiles = 32;
  int embedding_dim = 64;
  int ensemble_size = 2;

  // Optimisation.
  double gamma = 0.9999;
  double cost_gamma = 0.9999;
  double policy_lr = 3e-4;
  double critic_lr = 3e-4;
  double cost_critic_lr = 3e-4;
  double entropy_lr = 5e-4;
  double lagrangian_lr = 5e-4;
  double lagrangian_init = 0.0;
  double tau = 0.005;
  int target_update_freq = 2;
  std::int64_t buffer_size = 1'000'000;
  int batch_size = 256;
  std::int64_t learning_starts = 5000;
  int updates_per_step = 1;

  // Evaluation and output.
  std::int64_t eval_every = 10'000;
  int eval_episodes = 20;
  int eval_workers = 1;
  std::int64_t checkpoint_every = 0;  // 0: final checkpoint only

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;

  std::string to_json() const;
  /// Overwrites the fields present in `json_text`; unknown keys are errors.
  void merge_json(std::string_view json_text);
  static RunConfig from_json(std::string_view json_text);
  /// Sets one field from command-line text. Lists are comma separated.
  void set(std::string_view key, std::string_view value);

  agents::AgentConfig agent_config(int state_dim, int action_dim) const;
  std::int64_t effective_delta_horizon() const { return delta_horizon > 0 ? delta_horizon : std::max<std::int64_t>(1, total_steps); }

  bool operator==(const RunConfig&) const = default;
};

/// Field names accepted by merge_json, in serialisation order.
const std::vector<std::string>& config_keys();

std::unique_ptr<envs::Environment> make_environment(const RunConfig& config);

}  // namespace oraclab
