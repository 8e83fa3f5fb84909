#pragma once

// SAC-Lagrangian, WCSAC and ORAC gradient steps.
//
// All three share the same update: quantile cost critics, twin reward
// critics, a reparameterised actor on min Q_R - lambda * Q_C,rho - alpha *
// log pi, a projected multiplier step and entropy auto-tuning. SacLag runs
// with rho = 1; ORAC additionally picks actions with the optimistic explorer.

#include "oraclab/explorer.hpp"
#include "oraclab/networks.hpp"
#include "oraclab/param_io.hpp"
#include "oraclab/risk.hpp"
#include "oraclab/rng.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace oraclab::agents {

using nn::Matrix;
using nn::ParamSet;
using nn::Vector;

enum class AgentKind { SacLag, Wcsac, Orac };

std::string_view to_string(AgentKind kind);
AgentKind agent_kind_from_string(std::string_view name);

struct LagrangianState {
  double lambda = 0.0;
  double lr = 5e-4;
  double c_bar = 5.0;
};

struct EntropyState {
  double log_alpha = 0.0;
  double target_entropy = -1.0;
  double lr = 5e-4;
  nn::AdamState adam;

  double temperature() const;
};

struct AgentConfig {
  AgentKind kind = AgentKind::Wcsac;
  risk::RiskSpec risk{0.05, risk::CriticMode::FixedFraction, 1.0};
  explore::ExploreConfig explore;

  int state_dim = 2;
  int action_dim = 2;
  std::vector<int> policy_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  bool layer_norm = true;
  int quantiles = 32;
  int embedding_dim = 64;
  int ensemble_size = 2;

  double gamma = 0.9999;
  double cost_gamma = 0.9999;
  double policy_lr = 3e-4;
  double critic_lr = 3e-4;
  double cost_critic_lr = 3e-4;
  double entropy_lr = 5e-4;
  double initial_log_alpha = 0.0;
  double lagrangian_lr = 5e-4;
  double lagrangian_init = 0.0;
  double cost_limit = 5.0;
  double cost_limit_scale = 1.0;
  double tau = 0.005;
  int target_update_freq = 2;

  void validate() const;
  /// Risk level actually used by the updates (1 for SacLag).
  double effective_rho() const;
};

/// Column-per-transition batch.
struct Batch {
  Matrix states;       // S x B
  Matrix actions;      // A x B
  Matrix next_states;  // S x B
  Eigen::RowVectorXd rewards;
  Eigen::RowVectorXd costs;
  Eigen::RowVectorXd terminated;  // 1 where the bootstrap is cut

  Eigen::Index size() const { return states.cols(); }
};

/// Reparameterised actions sampled from the current policy.
struct PolicyBatchSample {
  Matrix actions;       // A x B
  Matrix pre_squash;    // A x B
  Matrix noise;         // A x B standard normal draws
  Eigen::RowVectorXd log_probs;
};

PolicyBatchSample sample_policy_batch(const nets::GaussianPolicy& policy, const Matrix& states, Rng& rng);

struct FaultLog {
  std::int64_t count = 0;
  std::string last;

  void record(std::string what);
};

struct ActorResult {
  double loss = 0.0;
  Eigen::RowVectorXd tail_costs;  // ensemble-mean Q_C,rho(s, a ~ pi)
  Eigen::RowVectorXd log_probs;
  bool applied = false;
};

struct UpdateStats {
  std::vector<double> cost_losses;
  double reward_loss = 0.0;
  double actor_loss = 0.0;
  double mean_tail_cost = 0.0;
  double lambda = 0.0;
  double temperature = 0.0;
  bool targets_updated = false;
};

/// Action and exploration diagnostics for one environment step.
struct ActResult {
  nets::PolicySample sample;
  double delta = 0.0;
  bool explore_fault = false;
};

class Agent {
 public:
  Agent(AgentConfig config, std::uint64_t init_seed);

  const AgentConfig& config() const { return config_; }
  AgentKind kind() const { return config_.kind; }

  /// Training-time action: ORAC's optimistic sample or a plain policy sample.
  ActResult act(const Vector& state, std::int64_t env_step, Rng& action_rng, Rng& fraction_rng) const;
  /// tanh(mu_T), used for evaluation.
  Vector deterministic_action(const Vector& state) const;

  /// One full gradient pass.
  UpdateStats update(const Batch& batch, Rng& action_rng, Rng& fraction_rng);

  // Individual steps, in the order update() applies them.
  std::vector<double> cost_critic_update(const Batch& batch, const PolicyBatchSample& next, Rng& fraction_rng);
  double reward_critic_update(const Batch& batch, const PolicyBatchSample& next);
  ActorResult actor_update(const Batch& batch, Rng& action_rng, Rng& fraction_rng);
  void lagrangian_update(const Eigen::RowVectorXd& tail_costs);
  void entropy_update(const Eigen::RowVectorXd& log_probs);
  void update_targets();

  /// Ensemble-mean tail estimate Q_C,rho per column (no optimism).
  Eigen::RowVectorXd tail_cost(const Matrix& states, const Matrix& actions, Rng& fraction_rng) const;

  const nets::GaussianPolicy& policy() const { return policy_; }
  nets::GaussianPolicy& policy() { return policy_; }
  const nets::RewardCriticPair& reward() const { return reward_; }
  nets::RewardCriticPair& reward() { return reward_; }
  const nets::CostCriticEnsemble& cost() const { return cost_; }
  nets::CostCriticEnsemble& cost() { return cost_; }
  const LagrangianState& lagrangian() const { return lagrangian_; }
  LagrangianState& lagrangian() { return lagrangian_; }
  const EntropyState& entropy() const { return entropy_; }
  EntropyState& entropy() { return entropy_; }
  std::int64_t gradient_steps() const { return gradient_steps_; }
  const FaultLog& faults() const { return faults_; }

  /// Networks, optimiser moments and scalars.
  nn::ParamArchive to_archive(std::string metadata) const;
  void load_archive(const nn::ParamArchive& archive);

 private:
  Matrix iqn_fraction_matrix(int n, double rho, Eigen::Index batch, Rng& rng, Matrix* weights) const;

  AgentConfig config_;
  nets::GaussianPolicy policy_;
  nets::RewardCriticPair reward_;
  nets::CostCriticEnsemble cost_;
  nn::AdamState policy_adam_;
  std::array<nn::AdamState, 2> reward_adam_;
  std::vector<nn::AdamState> cost_adam_;
  LagrangianState lagrangian_;
  EntropyState entropy_;
  std::int64_t gradient_steps_ = 0;
  FaultLog faults_;
};

}  // namespace oraclab::agents
