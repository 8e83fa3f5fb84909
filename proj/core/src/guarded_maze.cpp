#include "oraclab/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oraclab::envs {

std::string_view to_string(PathClass path) {
  switch (path) {
    case PathClass::Short: return "short";
    case PathClass::Long: return "long";
    case PathClass::None: return "none";
  }
  return "none";
}

void GuardedMazeConfig::validate() const {
  if (!(guard_prob >= 0.0 && guard_prob <= 1.0)) throw std::domain_error("guard probability must lie in [0, 1]");
  if (!(step_scale > 0.0 && step_scale <= 1.0)) throw std::domain_error("step scale must lie in (0, 1]");
  if (max_steps < 1 || reward_window < 1) throw std::domain_error("step limits must be >= 1");
  for (double v : {goal_bonus, guard_cost_low, guard_cost_high, long_path_cost, corner_bonus}) {
    if (!(v > 0.0)) throw std::domain_error("maze constants must be positive");
  }
}

bool MazeLayout::is_wall(int col, int row) {
  if (col <= 0 || row <= 0 || col >= kSize - 1 || row >= kSize - 1) return true;
  const bool in_chamber = col >= 2 && col <= 6 && row >= 3 && row <= 5;
  if (!in_chamber) return false;
  const bool perimeter = col == 2 || col == 6 || row == 3 || row == 5;
  if (!perimeter) return false;
  const Cell c{col, row};
  return !(c == kGuard || c == kPink);
}

bool MazeLayout::is_start(int col, int row) { return col <= 3 && row <= 3 && !is_wall(col, row); }

std::string MazeLayout::describe() {
  std::string out;
  for (int row = kSize - 1; row >= 0; --row) {
    for (int col = 0; col < kSize; ++col) {
      const Cell c{col, row};
      char ch = is_wall(col, row) ? '#' : '.';
      if (c == kGuard) ch = 'A';
      if (c == kPink) ch = 'P';
      if (c == kGoal) ch = 'G';
      if (c == kBonus) ch = 'B';
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

Cell EpisodeState::cell() const {
  return {static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y))};
}

namespace {

const std::vector<Cell>& start_cells() {
  static const std::vector<Cell> cells = [] {
    std::vector<Cell> v;
    for (int row = 0; row < MazeLayout::kSize; ++row) {
      for (int col = 0; col < MazeLayout::kSize; ++col) {
        if (MazeLayout::is_start(col, row)) v.push_back({col, row});
      }
    }
    return v;
  }();
  return cells;
}

constexpr double kFaceGap = 1e-9;

// Moves one coordinate by d, stopping at the face of the first wall cell.
double move_axis(double pos, double d, double other, bool horizontal) {
  const double target = pos + d;
  const int cur = static_cast<int>(std::floor(pos));
  const int dst = static_cast<int>(std::floor(target));
  const int o = static_cast<int>(std::floor(other));
  const int dir = dst > cur ? 1 : -1;
  for (int c = cur; c != dst;) {
    const int nxt = c + dir;
    const bool wall = horizontal ? MazeLayout::is_wall(nxt, o) : MazeLayout::is_wall(o, nxt);
    if (wall) return dir > 0 ? static_cast<double>(nxt) - kFaceGap : static_cast<double>(c);
    c = nxt;
  }
  return target;
}

}  // namespace

EpisodeState maze_reset(const GuardedMazeConfig& config, Rng& rng) {
  const auto& cells = start_cells();
  const Cell c = cells[rng.index(cells.size())];
  EpisodeState s;
  s.x = c.col + rng.uniform();
  s.y = c.row + rng.uniform();
  s.guard_present = rng.bernoulli(config.guard_prob);
  return s;
}

CmdpStep maze_step(const GuardedMazeConfig& config, EpisodeState& state, const Vector& action) {
  if (action.size() != 2) throw std::invalid_argument("maze action must be two-dimensional");
  const double ax = std::clamp(std::isfinite(action[0]) ? action[0] : 0.0, -1.0, 1.0);
  const double ay = std::clamp(std::isfinite(action[1]) ? action[1] : 0.0, -1.0, 1.0);

  state.x = move_axis(state.x, config.step_scale * ax, state.y, true);
  state.y = move_axis(state.y, config.step_scale * ay, state.x, false);

  CmdpStep out;
  out.reward = state.steps_taken < config.reward_window ? -1.0 : 0.0;
  ++state.steps_taken;

  const Cell c = state.cell();
  if (c == MazeLayout::kGuard) {
    out.cost = state.guard_present ? config.guard_cost_high : config.guard_cost_low;
    state.last_door = Door::Guard;
  } else if (c == MazeLayout::kPink) {
    out.cost = config.long_path_cost;
    state.last_door = Door::Pink;
  }
  if (c == MazeLayout::kBonus && !state.bonus_taken) {
    out.reward += config.corner_bonus;
    state.bonus_taken = true;
  }
  if (c == MazeLayout::kGoal) {
    out.reward += config.goal_bonus;
    out.terminated = true;
    state.reached_goal = true;
  }
  out.truncated = !out.terminated && state.steps_taken >= config.max_steps;
  out.next_state = maze_observation(state);
  return out;
}

Vector maze_observation(const EpisodeState& state) {
  Vector o(2);
  const double n = MazeLayout::kSize;
  o << 2.0 * state.x / n - 1.0, 2.0 * state.y / n - 1.0;
  return o;
}

PathClass classify_path(const EpisodeState& state) {
  if (!state.reached_goal) return PathClass::None;
  switch (state.last_door) {
    case Door::Guard: return PathClass::Short;
    case Door::Pink: return PathClass::Long;
    case Door::None: return PathClass::None;
  }
  return PathClass::None;
}

GuardedMaze::GuardedMaze(GuardedMazeConfig config) : config_(config) { config_.validate(); }

Vector GuardedMaze::reset(Rng& rng) {
  state_ = maze_reset(config_, rng);
  return maze_observation(state_);
}

CmdpStep GuardedMaze::step(const Vector& action, Rng&) { return maze_step(config_, state_, action); }

}  // namespace oraclab::envs
