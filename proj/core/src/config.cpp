#include "oraclab/config.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <stdexcept>
#include <type_traits>

namespace oraclab {

namespace {

using json = nlohmann::json;

template <typename C, typename F>
void visit_fields(C& c, F&& f) {
  f("env", c.env);
  f("agent", c.agent);
  f("seed", c.seed);
  f("total-steps", c.total_steps);
  f("rho", c.rho);
  f("cost-limit", c.cost_limit);
  f("cost-limit-scale", c.cost_limit_scale);
  f("critic-mode", c.critic_mode);
  f("kappa", c.kappa);
  f("guard-prob", c.guard_prob);
  f("step-scale", c.step_scale);
  f("beta-r", c.beta_r);
  f("beta-c", c.beta_c);
  f("delta", c.delta);
  f("delta-horizon", c.delta_horizon);
  f("policy-hidden", c.policy_hidden);
  f("critic-hidden", c.critic_hidden);
  f("layer-norm", c.layer_norm);
  f("quantiles", c.quantiles);
  f("embedding-dim", c.embedding_dim);
  f("ensemble-size", c.ensemble_size);
  f("gamma", c.gamma);
  f("cost-gamma", c.cost_gamma);
  f("policy-lr", c.policy_lr);
  f("critic-lr", c.critic_lr);
  f("cost-critic-lr", c.cost_critic_lr);
  f("entropy-lr", c.entropy_lr);
  f("lagrangian-lr", c.lagrangian_lr);
  f("lagrangian-init", c.lagrangian_init);
  f("tau", c.tau);
  f("target-update-freq", c.target_update_freq);
  f("buffer-size", c.buffer_size);
  f("batch-size", c.batch_size);
  f("learning-starts", c.learning_starts);
  f("updates-per-step", c.updates_per_step);
  f("eval-every", c.eval_every);
  f("eval-episodes", c.eval_episodes);
  f("eval-workers", c.eval_workers);
  f("checkpoint-every", c.checkpoint_every);
}

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw std::invalid_argument("invalid config field '" + field + "': " + why);
}

void require(bool ok, const char* field, const char* why) {
  if (!ok) bad(field, why);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    RunConfig c;
    visit_fields(c, [&](const char* name, auto&) { k.emplace_back(name); });
    return k;
  }();
  return keys;
}

void RunConfig::validate() const {
  require(env == "guardedmaze" || env == "riskybandit", "env", "expected guardedmaze or riskybandit");
  require(agent == "saclag" || agent == "wcsac" || agent == "orac", "agent", "expected saclag, wcsac or orac");
  require(total_steps >= 0, "total-steps", "must be >= 0");
  require(rho > 0.0 && rho <= 1.0, "rho", "must lie in (0, 1]");
  require(std::isfinite(cost_limit), "cost-limit", "must be finite");
  require(cost_limit_scale > 0.0 && std::isfinite(cost_limit_scale), "cost-limit-scale", "must be > 0");
  require(critic_mode == "fixed" || critic_mode == "iqn", "critic-mode", "expected fixed or iqn");
  require(kappa > 0.0 && std::isfinite(kappa), "kappa", "must be > 0");
  require(guard_prob >= 0.0 && guard_prob <= 1.0, "guard-prob", "must lie in [0, 1]");
  require(step_scale > 0.0 && step_scale <= 1.0, "step-scale", "must lie in (0, 1]");
  require(beta_r >= 0.0 && std::isfinite(beta_r), "beta-r", "must be >= 0");
  require(beta_c >= 0.0 && std::isfinite(beta_c), "beta-c", "must be >= 0");
  require(delta >= 0.0 && std::isfinite(delta), "delta", "must be >= 0");
  require(delta_horizon >= 0, "delta-horizon", "must be >= 0");
  for (int h : policy_hidden) require(h >= 1, "policy-hidden", "widths must be >= 1");
  for (int h : critic_hidden) require(h >= 1, "critic-hidden", "widths must be >= 1");
  require(critic_mode != "iqn" || !critic_hidden.empty(), "critic-hidden", "IQN critics need a hidden layer");
  require(quantiles >= 1, "quantiles", "must be >= 1");
  require(embedding_dim >= 1, "embedding-dim", "must be >= 1");
  require(ensemble_size >= 1, "ensemble-size", "must be >= 1");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma", "must lie in [0, 1]");
  require(cost_gamma >= 0.0 && cost_gamma <= 1.0, "cost-gamma", "must lie in [0, 1]");
  require(policy_lr > 0.0, "policy-lr", "must be > 0");
  require(critic_lr > 0.0, "critic-lr", "must be > 0");
  require(cost_critic_lr > 0.0, "cost-critic-lr", "must be > 0");
  require(entropy_lr > 0.0, "entropy-lr", "must be > 0");
  require(lagrangian_lr >= 0.0, "lagrangian-lr", "must be >= 0");
  require(lagrangian_init >= 0.0, "lagrangian-init", "must be >= 0");
  require(tau > 0.0 && tau <= 1.0, "tau", "must lie in (0, 1]");
  require(target_update_freq >= 1, "target-update-freq", "must be >= 1");
  require(buffer_size >= 1, "buffer-size", "must be >= 1");
  require(batch_size >= 1, "batch-size", "must be >= 1");
  require(batch_size <= buffer_size, "batch-size", "must not exceed buffer-size");
  require(learning_starts >= 0, "learning-starts", "must be >= 0");
  require(updates_per_step >= 1, "updates-per-step", "must be >= 1");
  require(eval_every >= 1, "eval-every", "must be >= 1");
  require(eval_episodes >= 1, "eval-episodes", "must be >= 1");
  require(eval_workers >= 1, "eval-workers", "must be >= 1");
  require(checkpoint_every >= 0, "checkpoint-every", "must be >= 0");
}

std::string RunConfig::to_json() const {
  json j = json::object();
  visit_fields(*this, [&](const char* name, const auto& value) { j[name] = value; });
  return j.dump(2) + "\n";
}

void RunConfig::merge_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  const auto& keys = config_keys();
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) throw std::invalid_argument("unknown config key '" + item.key() + "'");
  }
  visit_fields(*this, [&](const char* name, auto& value) {
    const auto it = j.find(name);
    if (it == j.end()) return;
    try {
      value = it->template get<std::remove_reference_t<decltype(value)>>();
    } catch (const json::exception& e) {
      bad(name, std::string("wrong type (") + e.what() + ")");
    }
  });
}

void RunConfig::set(std::string_view key, std::string_view value) {
  bool found = false;
  visit_fields(*this, [&](const char* name, auto& field) {
    if (key != name) return;
    found = true;
    using T = std::remove_reference_t<decltype(field)>;
    json j;
    if constexpr (std::is_same_v<T, std::string>) {
      j = std::string(value);
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      j = json::array();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string item(rest.substr(0, comma));
        try {
          std::size_t used = 0;
          j.push_back(std::stoi(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          bad(name, "expected a comma separated list of integers");
        }
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    } else {
      try {
        j = json::parse(value);
      } catch (const json::parse_error&) {
        bad(name, "cannot parse '" + std::string(value) + "'");
      }
    }
    try {
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (j.is_number_float()) bad(name, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (j.is_number_integer() && !j.is_number_unsigned()) bad(name, "expected a non-negative integer");
        }
      }
      field = j.template get<T>();
    } catch (const json::exception&) {
      bad(name, "cannot parse '" + std::string(value) + "'");
    }
  });
  if (!found) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

RunConfig RunConfig::from_json(std::string_view json_text) {
  RunConfig c;
  c.merge_json(json_text);
  return c;
}

agents::AgentConfig RunConfig::agent_config(int state_dim, int action_dim) const {
  agents::AgentConfig a;
  a.kind = agents::agent_kind_from_string(agent);
  a.risk.rho = rho;
  a.risk.mode = risk::critic_mode_from_string(critic_mode);
  a.risk.kappa = kappa;
  a.explore.beta_r = beta_r;
  a.explore.beta_c = beta_c;
  a.explore.delta0 = delta;
  a.explore.horizon = effective_delta_horizon();
  a.state_dim = state_dim;
  a.action_dim = action_dim;
  a.policy_hidden = policy_hidden;
  a.critic_hidden = critic_hidden;
  a.layer_norm = layer_norm;
  a.quantiles = quantiles;
  a.embedding_dim = embedding_dim;
  a.ensemble_size = ensemble_size;
  a.gamma = gamma;
  a.cost_gamma = cost_gamma;
  a.policy_lr = policy_lr;
  a.critic_lr = critic_lr;
  a.cost_critic_lr = cost_critic_lr;
  a.entropy_lr = entropy_lr;
  a.lagrangian_lr = lagrangian_lr;
  a.lagrangian_init = lagrangian_init;
  a.cost_limit = cost_limit;
  a.cost_limit_scale = cost_limit_scale;
  a.tau = tau;
  a.target_update_freq = target_update_freq;
  return a;
}

std::unique_ptr<envs::Environment> make_environment(const RunConfig& config) {
  if (config.env == "guardedmaze") {
    envs::GuardedMazeConfig m;
    m.guard_prob = config.guard_prob;
    m.step_scale = config.step_scale;
    return std::make_unique<envs::GuardedMaze>(m);
  }
  if (config.env == "riskybandit") return std::make_unique<envs::RiskyBandit>();
  throw std::invalid_argument("unknown env '" + config.env + "'");
}

}  // namespace oraclab
