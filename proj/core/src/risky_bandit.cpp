#include "oraclab/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oraclab::envs {

void RiskyBanditConfig::validate() const {
  if (!(base_cost >= 0.0) || !(spike_cost >= base_cost)) throw std::domain_error("bandit costs must be ordered and >= 0");
  if (!(spike_prob >= 0.0 && spike_prob <= 1.0)) throw std::domain_error("spike probability must lie in [0, 1]");
}

CmdpStep bandit_step(const RiskyBanditConfig& config, double action, Rng& rng) {
  const double a = std::clamp(std::isfinite(action) ? action : 0.0, -1.0, 1.0);
  CmdpStep out;
  out.next_state = Vector::Zero(1);
  out.reward = a;
  if (a > 0.0) out.cost = rng.bernoulli(config.spike_prob) ? config.spike_cost : config.base_cost;
  out.terminated = true;
  return out;
}

RiskyBandit::RiskyBandit(RiskyBanditConfig config) : config_(config) { config_.validate(); }

Vector RiskyBandit::reset(Rng&) { return Vector::Zero(1); }

CmdpStep RiskyBandit::step(const Vector& action, Rng& rng) {
  if (action.size() != 1) throw std::invalid_argument("bandit action must be one-dimensional");
  return bandit_step(config_, action[0], rng);
}

}  // namespace oraclab::envs
