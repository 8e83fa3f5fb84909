#pragma once

#include "oraclab/env.hpp"
#include "oraclab/networks.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace oraclab {

struct EvalReport {
  std::int64_t step = 0;
  int episodes = 0;
  double mean_reward = 0.0;
  double mean_cost = 0.0;
  double cvar_cost = 0.0;  // mean of the worst ceil(rho * N) episode costs
  double rho = 1.0;
  std::vector<double> episode_costs;
  std::vector<double> episode_rewards;
  std::vector<double> first_actions;  // first component of each episode's first action
  int path_short = 0;
  int path_long = 0;
  int path_none = 0;
  double goal_rate = 0.0;
  bool long_path_converged = false;
  std::int64_t steps_to_convergence = -1;
};

using EnvFactory = std::function<std::unique_ptr<envs::Environment>()>;

/// Runs `episodes` episodes with the deterministic action tanh(mu_T). Episode
/// i resets its environment from derive_seed(seed, i), so any worker count
/// gives the same report.
EvalReport evaluate(const nets::GaussianPolicy& policy, const EnvFactory& make_env, int episodes, double rho,
                    std::uint64_t seed, int workers = 1);

/// Latches once W consecutive evaluations are all-Long with every episode
/// reaching the goal; steps_to_convergence is the first step of that window.
class ConvergenceDetector {
 public:
  explicit ConvergenceDetector(int window = 5);

  /// Records one evaluation and fills its convergence fields.
  void observe(EvalReport& report);

  bool converged() const { return converged_; }
  std::int64_t steps_to_convergence() const { return steps_; }
  int window() const { return window_; }

 private:
  int window_;
  int streak_ = 0;
  std::int64_t streak_start_ = -1;
  bool converged_ = false;
  std::int64_t steps_ = -1;
};

}  // namespace oraclab
