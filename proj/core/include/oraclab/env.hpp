#pragma once

// Constrained MDP environments: the GuardedMaze gridworld and a one-step
// risky bandit with an analytic cost distribution.

#include "oraclab/rng.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <string>
#include <string_view>

namespace oraclab::envs {

using Vector = Eigen::VectorXd;

struct CmdpStep {
  Vector next_state;
  double reward = 0.0;
  double cost = 0.0;
  bool terminated = false;
  bool truncated = false;
};

enum class PathClass { Short, Long, None };
std::string_view to_string(PathClass path);

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::string_view name() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual Vector reset(Rng& rng) = 0;
  virtual CmdpStep step(const Vector& action, Rng& rng) = 0;
  /// Path taken by the current episode (GuardedMaze only).
  virtual PathClass path() const { return PathClass::None; }
};

// --- GuardedMaze ----------------------------------------------------------

struct GuardedMazeConfig {
  double guard_prob = 0.15;
  double step_scale = 1.0;
  int max_steps = 100;
  int reward_window = 32;
  double goal_bonus = 16.0;
  double guard_cost_low = 2.0;
  double guard_cost_high = 20.0;
  double long_path_cost = 4.0;
  double corner_bonus = 1.0;

  void validate() const;
};

struct Cell {
  int col = 0;
  int row = 0;
  bool operator==(const Cell&) const = default;
};

/// 9 x 9 map, (col, row) with row 0 at the bottom.
struct MazeLayout {
  static constexpr int kSize = 9;
  static constexpr Cell kGuard{2, 4};
  static constexpr Cell kPink{6, 4};
  static constexpr Cell kGoal{4, 4};
  static constexpr Cell kBonus{7, 7};

  static bool is_wall(int col, int row);
  static bool is_start(int col, int row);
  /// ASCII rows from the top (row 8) down, '#' wall, '.' open, 'A' guard,
  /// 'P' pink, 'G' goal, 'B' bonus.
  static std::string describe();
};

enum class Door { None, Guard, Pink };

struct EpisodeState {
  double x = 0.0;
  double y = 0.0;
  int steps_taken = 0;
  bool guard_present = false;
  bool bonus_taken = false;
  bool reached_goal = false;
  Door last_door = Door::None;

  Cell cell() const;
};

EpisodeState maze_reset(const GuardedMazeConfig& config, Rng& rng);
CmdpStep maze_step(const GuardedMazeConfig& config, EpisodeState& state, const Vector& action);
/// (x, y) mapped to [-1, 1].
Vector maze_observation(const EpisodeState& state);
PathClass classify_path(const EpisodeState& state);

class GuardedMaze final : public Environment {
 public:
  explicit GuardedMaze(GuardedMazeConfig config = {});

  std::string_view name() const override { return "guardedmaze"; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  Vector reset(Rng& rng) override;
  CmdpStep step(const Vector& action, Rng& rng) override;
  PathClass path() const override { return classify_path(state_); }

  const GuardedMazeConfig& config() const { return config_; }
  const EpisodeState& state() const { return state_; }
  EpisodeState& state() { return state_; }

 private:
  GuardedMazeConfig config_;
  EpisodeState state_;
};

// --- RiskyBandit ----------------------------------------------------------

struct RiskyBanditConfig {
  double base_cost = 0.5;
  double spike_cost = 20.0;
  double spike_prob = 0.02;

  void validate() const;
};

CmdpStep bandit_step(const RiskyBanditConfig& config, double action, Rng& rng);

class RiskyBandit final : public Environment {
 public:
  explicit RiskyBandit(RiskyBanditConfig config = {});

  std::string_view name() const override { return "riskybandit"; }
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  Vector reset(Rng& rng) override;
  CmdpStep step(const Vector& action, Rng& rng) override;

  const RiskyBanditConfig& config() const { return config_; }

 private:
  RiskyBanditConfig config_;
};

}  // namespace oraclab::envs
