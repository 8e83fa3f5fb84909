#include "oraclab/agent.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oraclab::agents {

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::SacLag: return "saclag";
    case AgentKind::Wcsac: return "wcsac";
    case AgentKind::Orac: return "orac";
  }
  return "unknown";
}

AgentKind agent_kind_from_string(std::string_view name) {
  if (name == "saclag") return AgentKind::SacLag;
  if (name == "wcsac") return AgentKind::Wcsac;
  if (name == "orac") return AgentKind::Orac;
  throw std::invalid_argument("unknown agent '" + std::string(name) + "' (expected saclag, wcsac or orac)");
}

double EntropyState::temperature() const { return std::exp(log_alpha); }

void FaultLog::record(std::string what) {
  ++count;
  last = std::move(what);
}

void AgentConfig::validate() const {
  risk.validate();
  explore.validate();
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(std::string(name) + " must be > 0");
  };
  if (state_dim < 1 || action_dim < 1) throw std::domain_error("state and action dims must be >= 1");
  if (quantiles < 1) throw std::domain_error("quantiles must be >= 1");
  if (embedding_dim < 1) throw std::domain_error("embedding dim must be >= 1");
  if (ensemble_size < 1) throw std::domain_error("ensemble size must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::domain_error("gamma must lie in [0, 1]");
  if (!(cost_gamma >= 0.0 && cost_gamma <= 1.0)) throw std::domain_error("cost gamma must lie in [0, 1]");
  positive(policy_lr, "policy lr");
  positive(critic_lr, "critic lr");
  positive(cost_critic_lr, "cost critic lr");
  positive(entropy_lr, "entropy lr");
  if (!(lagrangian_lr >= 0.0)) throw std::domain_error("lagrangian lr must be >= 0");
  if (!(lagrangian_init >= 0.0)) throw std::domain_error("initial lambda must be >= 0");
  if (!std::isfinite(cost_limit)) throw std::domain_error("cost limit must be finite");
  positive(cost_limit_scale, "cost limit scale");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::domain_error("tau must lie in (0, 1]");
  if (target_update_freq < 1) throw std::domain_error("target update frequency must be >= 1");
  for (int h : policy_hidden) if (h < 1) throw std::domain_error("hidden widths must be >= 1");
  for (int h : critic_hidden) if (h < 1) throw std::domain_error("hidden widths must be >= 1");
  if (risk.mode == risk::CriticMode::IQN && critic_hidden.empty()) {
    throw std::domain_error("IQN critics need at least one hidden layer");
  }
}

double AgentConfig::effective_rho() const { return kind == AgentKind::SacLag ? 1.0 : risk.rho; }

namespace {

PolicyBatchSample sample_from_batch(const nets::GaussianPolicy::Batch& head, Rng& rng) {
  const Eigen::Index a = head.mu.rows();
  const Eigen::Index b = head.mu.cols();
  PolicyBatchSample s;
  s.noise.resize(a, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index i = 0; i < a; ++i) s.noise(i, j) = rng.normal();
  }
  const Matrix sigma = head.log_sigma.array().exp();
  s.pre_squash = head.mu + sigma.cwiseProduct(s.noise);
  s.actions = s.pre_squash.array().tanh();
  s.log_probs.resize(b);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index j = 0; j < b; ++j) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < a; ++i) {
      lp += -0.5 * s.noise(i, j) * s.noise(i, j) - head.log_sigma(i, j) - half_log_2pi -
            nets::log_one_minus_tanh_sq(s.pre_squash(i, j));
    }
    s.log_probs[j] = lp;
  }
  return s;
}

}  // namespace

PolicyBatchSample sample_policy_batch(const nets::GaussianPolicy& policy, const Matrix& states, Rng& rng) {
  return sample_from_batch(policy.evaluate(states), rng);
}

namespace {

nets::QuantileCriticConfig critic_config(const AgentConfig& c) {
  nets::QuantileCriticConfig q;
  q.mode = c.risk.mode;
  q.state_dim = c.state_dim;
  q.action_dim = c.action_dim;
  q.quantiles = c.quantiles;
  q.embedding_dim = c.embedding_dim;
  q.hidden = c.critic_hidden;
  q.layer_norm = c.layer_norm;
  return q;
}

enum InitStream : std::uint64_t { kPolicyStream = 0, kRewardStream = 1, kCostStream = 2 };

// Ensemble-mean quantiles plus the pieces needed to differentiate a tail
// estimate of them.
struct CostForward {
  std::vector<Matrix> member_q;               // N x B each
  std::vector<nets::QuantileCache> caches;
  nets::TailEstimate tail;                    // over the member mean
};

CostForward cost_forward(const nets::CostCriticEnsemble& cost, const Matrix& sa, const Matrix* fractions,
                         const Matrix* fraction_weights, double rho, bool keep_caches) {
  CostForward f;
  const int members = cost.members();
  f.member_q.reserve(static_cast<std::size_t>(members));
  if (keep_caches) f.caches.resize(static_cast<std::size_t>(members));
  Matrix mean;
  for (int e = 0; e < members; ++e) {
    const auto idx = static_cast<std::size_t>(e);
    f.member_q.push_back(cost.critic.forward(cost.online[idx], sa, fractions, keep_caches ? &f.caches[idx] : nullptr));
    if (e == 0) {
      mean = f.member_q.back();
    } else {
      mean += f.member_q.back();
    }
  }
  mean /= static_cast<double>(members);
  if (cost.critic.mode() == risk::CriticMode::FixedFraction) {
    f.tail = nets::fixed_tail(mean, cost.fractions, rho);
  } else {
    f.tail = nets::weighted_tail(mean, *fraction_weights);
  }
  return f;
}

Matrix action_rows(const Matrix& input_grad, Eigen::Index action_dim) { return input_grad.bottomRows(action_dim); }

// The init seed is not part of the trained state, so it is not archived.
void push_network(nn::ParamArchive& archive, std::string name, nn::MlpSpec spec, ParamSet params) {
  spec.init_seed = 0;
  archive.networks.push_back({std::move(name), std::move(spec), std::move(params)});
}

ParamSet slice(const ParamSet& params, std::size_t offset, std::size_t count) {
  const auto v = params.view(offset, count);
  return ParamSet(std::vector<nn::NamedArray>(v.begin(), v.end()));
}

// Splits an ensemble member into per-component records.
void push_member(nn::ParamArchive& archive, const nets::QuantileCritic& critic, const std::string& prefix,
                 const ParamSet& params) {
  std::size_t offset = 0;
  for (const auto& [name, spec] : critic.components()) {
    push_network(archive, prefix + "." + name, spec, slice(params, offset, spec.array_count()));
    offset += spec.array_count();
  }
}

ParamSet load_network(const nn::ParamArchive& archive, const std::string& name, const nn::MlpSpec& spec,
                      const ParamSet& like) {
  const nn::NetworkRecord& rec = archive.network(name);
  if (!(rec.spec.input_dim == spec.input_dim && rec.spec.output_dim == spec.output_dim &&
        rec.spec.hidden == spec.hidden && rec.spec.layer_norm == spec.layer_norm)) {
    throw std::runtime_error("checkpoint network '" + name + "' does not match the configured architecture");
  }
  if (!rec.params.same_shape(like)) throw std::runtime_error("checkpoint network '" + name + "' has wrong shapes");
  return rec.params;
}

ParamSet load_member(const nn::ParamArchive& archive, const nets::QuantileCritic& critic, const std::string& prefix,
                     const ParamSet& like) {
  ParamSet out;
  std::size_t offset = 0;
  for (const auto& [name, spec] : critic.components()) {
    out.append(load_network(archive, prefix + "." + name, spec, slice(like, offset, spec.array_count())));
    offset += spec.array_count();
  }
  return out;
}

ParamSet scalar(const std::string& name, double value) {
  return ParamSet({{name, Matrix::Constant(1, 1, value)}});
}

double read_scalar(const nn::ParamArchive& archive, const std::string& name) {
  for (const auto& a : archive.scalars.arrays()) {
    if (a.name == name) return a.value(0, 0);
  }
  throw std::runtime_error("checkpoint has no scalar '" + name + "'");
}

}  // namespace

Agent::Agent(AgentConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  policy_ = nets::GaussianPolicy(config_.state_dim, config_.action_dim, config_.policy_hidden, config_.layer_norm,
                                 derive_seed(init_seed, kPolicyStream));
  reward_ = nets::RewardCriticPair(config_.state_dim, config_.action_dim, config_.critic_hidden, config_.layer_norm,
                                   derive_seed(init_seed, kRewardStream));
  cost_ = nets::CostCriticEnsemble(critic_config(config_), config_.ensemble_size,
                                   derive_seed(init_seed, kCostStream));

  policy_adam_ = nn::AdamState::for_params(policy_.params(), config_.policy_lr);
  for (std::size_t i = 0; i < 2; ++i) reward_adam_[i] = nn::AdamState::for_params(reward_.online[i], config_.critic_lr);
  for (const auto& p : cost_.online) cost_adam_.push_back(nn::AdamState::for_params(p, config_.cost_critic_lr));

  lagrangian_.lambda = config_.lagrangian_init;
  lagrangian_.lr = config_.lagrangian_lr;
  lagrangian_.c_bar = config_.cost_limit * config_.cost_limit_scale;

  entropy_.log_alpha = config_.initial_log_alpha;
  entropy_.target_entropy = -static_cast<double>(config_.action_dim);
  entropy_.lr = config_.entropy_lr;
  entropy_.adam = nn::AdamState::for_params(scalar("log_alpha", entropy_.log_alpha), config_.entropy_lr);
}

ActResult Agent::act(const Vector& state, std::int64_t env_step, Rng& action_rng, Rng& fraction_rng) const {
  ActResult r;
  if (config_.kind != AgentKind::Orac) {
    r.sample = nets::policy_sample(policy_, state, action_rng);
    return r;
  }
  risk::RiskSpec spec = config_.risk;
  spec.rho = config_.effective_rho();
  const explore::ExploreResult e =
      explore::explore_action(state, {policy_, reward_, cost_}, lagrangian_.lambda, lagrangian_.c_bar, spec,
                              config_.explore, env_step, action_rng, fraction_rng);
  r.sample = e.sample;
  r.delta = e.delta;
  r.explore_fault = e.fault;
  return r;
}

Vector Agent::deterministic_action(const Vector& state) const { return policy_.head(state).mu_pre.array().tanh(); }

Matrix Agent::iqn_fraction_matrix(int n, double rho, Eigen::Index batch, Rng& rng, Matrix* weights) const {
  Matrix fr(n, batch);
  if (weights) weights->resize(n, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const nets::IqnFractions f = nets::iqn_fractions(n, rho, rng);
    for (int i = 0; i < n; ++i) {
      fr(i, b) = f.midpoints[static_cast<std::size_t>(i)];
      if (weights) (*weights)(i, b) = f.weights[static_cast<std::size_t>(i)];
    }
  }
  return fr;
}

std::vector<double> Agent::cost_critic_update(const Batch& batch, const PolicyBatchSample& next, Rng& fraction_rng) {
  const Eigen::Index b = batch.size();
  const Matrix sa = nets::join_state_action(batch.states, batch.actions);
  const Matrix next_sa = nets::join_state_action(batch.next_states, next.actions);
  const bool iqn = cost_.critic.mode() == risk::CriticMode::IQN;
  const double kappa = config_.risk.kappa;

  // Current fractions (rows of Z) and target fractions with their weights.
  Matrix cur_fr, tgt_fr, tgt_w;
  const int n = config_.quantiles;
  if (iqn) {
    cur_fr = iqn_fraction_matrix(n, 1.0, b, fraction_rng, nullptr);
    tgt_fr = iqn_fraction_matrix(n, 1.0, b, fraction_rng, &tgt_w);
  } else {
    cur_fr.resize(n, b);
    for (int i = 0; i < n; ++i) cur_fr.row(i).setConstant(cost_.fractions[static_cast<std::size_t>(i)]);
    tgt_w = Matrix::Constant(n, b, 1.0 / n);
  }

  std::vector<double> losses;
  for (int e = 0; e < cost_.members(); ++e) {
    const auto idx = static_cast<std::size_t>(e);
    nets::QuantileCache cache;
    const Matrix z = cost_.critic.forward(cost_.online[idx], sa, iqn ? &cur_fr : nullptr, &cache);
    const Matrix zt = cost_.critic.forward(cost_.target[idx], next_sa, iqn ? &tgt_fr : nullptr);

    Matrix dz = Matrix::Zero(z.rows(), b);
    double loss = 0.0;
    for (Eigen::Index col = 0; col < b; ++col) {
      const double bootstrap = config_.cost_gamma * (1.0 - batch.terminated[col]);
      for (Eigen::Index j = 0; j < zt.rows(); ++j) {
        const double target = batch.costs[col] + bootstrap * zt(j, col);
        const double w = tgt_w(j, col);
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
          const risk::LossAndGrad lg = risk::quantile_huber_with_grad(target - z(i, col), cur_fr(i, col), kappa);
          loss += w * lg.loss;
          dz(i, col) -= w * lg.grad;
        }
      }
    }
    loss /= static_cast<double>(b);
    dz /= static_cast<double>(b);
    losses.push_back(loss);
    if (!std::isfinite(loss)) {
      faults_.record("non-finite cost critic loss (member " + std::to_string(e) + ")");
      continue;
    }
    const nn::Gradients g = cost_.critic.backward(cost_.online[idx], cache, dz, true);
    if (!nn::adam_step(cost_adam_[idx], cost_.online[idx], g.params)) {
      faults_.record("non-finite cost critic gradient (member " + std::to_string(e) + ")");
    }
  }
  return losses;
}

double Agent::reward_critic_update(const Batch& batch, const PolicyBatchSample& next) {
  const Eigen::Index b = batch.size();
  const Matrix sa = nets::join_state_action(batch.states, batch.actions);
  const Matrix next_sa = nets::join_state_action(batch.next_states, next.actions);
  const double temp = entropy_.temperature();

  const Matrix t0 = nn::forward(reward_.spec, reward_.target[0].view(), next_sa);
  const Matrix t1 = nn::forward(reward_.spec, reward_.target[1].view(), next_sa);
  Eigen::RowVectorXd y(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double soft = std::min(t0(0, j), t1(0, j)) - temp * next.log_probs[j];
    y[j] = batch.rewards[j] + config_.gamma * (1.0 - batch.terminated[j]) * soft;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    nn::ForwardCache cache;
    const Matrix q = nn::forward(reward_.spec, reward_.online[i].view(), sa, &cache);
    const Eigen::RowVectorXd diff = q.row(0) - y;
    const double loss = diff.squaredNorm() / static_cast<double>(b);
    total += loss;
    if (!std::isfinite(loss)) {
      faults_.record("non-finite reward critic loss");
      continue;
    }
    const Matrix up = (2.0 / static_cast<double>(b)) * diff;
    const nn::Gradients g = nn::backward(reward_.spec, reward_.online[i].view(), cache, up, true);
    if (!nn::adam_step(reward_adam_[i], reward_.online[i], g.params)) {
      faults_.record("non-finite reward critic gradient");
    }
  }
  return 0.5 * total;
}

ActorResult Agent::actor_update(const Batch& batch, Rng& action_rng, Rng& fraction_rng) {
  const Eigen::Index b = batch.size();
  const Eigen::Index a_dim = config_.action_dim;
  const double temp = entropy_.temperature();
  const double lambda = lagrangian_.lambda;
  const double rho = config_.effective_rho();

  const auto head = policy_.evaluate(batch.states);
  const PolicyBatchSample s = sample_from_batch(head, action_rng);
  const Matrix sa = nets::join_state_action(batch.states, s.actions);

  // Twin minimum and its action gradient.
  std::array<nn::ForwardCache, 2> rc;
  std::array<Matrix, 2> q;
  for (std::size_t i = 0; i < 2; ++i) q[i] = nn::forward(reward_.spec, reward_.online[i].view(), sa, &rc[i]);
  Matrix pick0(1, b), pick1(1, b);
  Eigen::RowVectorXd qmin(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const bool first = q[0](0, j) <= q[1](0, j);
    pick0(0, j) = first ? 1.0 : 0.0;
    pick1(0, j) = first ? 0.0 : 1.0;
    qmin[j] = first ? q[0](0, j) : q[1](0, j);
  }
  Matrix d_qmin = action_rows(nn::backward(reward_.spec, reward_.online[0].view(), rc[0], pick0, false).input, a_dim);
  d_qmin += action_rows(nn::backward(reward_.spec, reward_.online[1].view(), rc[1], pick1, false).input, a_dim);

  // Ensemble-mean tail of the cost quantiles and its action gradient.
  const bool iqn = cost_.critic.mode() == risk::CriticMode::IQN;
  Matrix fr, fw;
  if (iqn) fr = iqn_fraction_matrix(config_.quantiles, rho, b, fraction_rng, &fw);
  CostForward cf = cost_forward(cost_, sa, iqn ? &fr : nullptr, iqn ? &fw : nullptr, rho, true);
  Matrix d_cost = Matrix::Zero(a_dim, b);
  if (lambda != 0.0) {
    const Matrix up = cf.tail.weights / static_cast<double>(cost_.members());
    for (int e = 0; e < cost_.members(); ++e) {
      const auto idx = static_cast<std::size_t>(e);
      d_cost += action_rows(cost_.critic.backward(cost_.online[idx], cf.caches[idx], up, false).input, a_dim);
    }
  }

  ActorResult r;
  r.tail_costs = cf.tail.value;
  r.log_probs = s.log_probs;
  r.loss = (temp * s.log_probs - qmin + lambda * cf.tail.value).mean();
  if (!std::isfinite(r.loss)) {
    faults_.record("non-finite actor loss");
    return r;
  }

  const Matrix d_action = -d_qmin + lambda * d_cost;
  const Matrix one_minus_a2 = (1.0 - s.actions.array().square()).matrix();
  const Matrix d_u = d_action.cwiseProduct(one_minus_a2) + 2.0 * temp * s.actions;
  const Matrix sigma = head.log_sigma.array().exp();
  const Matrix d_mu = d_u / static_cast<double>(b);
  const Matrix d_log_sigma = (d_u.cwiseProduct(sigma).cwiseProduct(s.noise).array() - temp).matrix() /
                             static_cast<double>(b);
  const ParamSet grads = policy_.backward(head, d_mu, d_log_sigma);
  if (!nn::adam_step(policy_adam_, policy_.params(), grads)) {
    faults_.record("non-finite actor gradient");
    return r;
  }
  r.applied = true;
  return r;
}

void Agent::lagrangian_update(const Eigen::RowVectorXd& tail_costs) {
  if (tail_costs.size() == 0) return;
  const double g = tail_costs.mean() - lagrangian_.c_bar;
  if (!std::isfinite(g)) {
    faults_.record("non-finite lagrangian gradient");
    return;
  }
  lagrangian_.lambda = std::max(0.0, lagrangian_.lambda + lagrangian_.lr * g);
}

void Agent::entropy_update(const Eigen::RowVectorXd& log_probs) {
  if (log_probs.size() == 0) return;
  const double temp = entropy_.temperature();
  const double g = -temp * (log_probs.array() + entropy_.target_entropy).mean();
  ParamSet param = scalar("log_alpha", entropy_.log_alpha);
  if (!nn::adam_step(entropy_.adam, param, scalar("log_alpha", g))) {
    faults_.record("non-finite entropy gradient");
    return;
  }
  entropy_.log_alpha = param[0].value(0, 0);
}

void Agent::update_targets() {
  for (std::size_t i = 0; i < 2; ++i) nn::polyak_update(reward_.target[i], reward_.online[i], config_.tau);
  for (std::size_t e = 0; e < cost_.online.size(); ++e) nn::polyak_update(cost_.target[e], cost_.online[e], config_.tau);
}

Eigen::RowVectorXd Agent::tail_cost(const Matrix& states, const Matrix& actions, Rng& fraction_rng) const {
  const double rho = config_.effective_rho();
  const bool iqn = cost_.critic.mode() == risk::CriticMode::IQN;
  Matrix fr, fw;
  if (iqn) fr = iqn_fraction_matrix(config_.quantiles, rho, states.cols(), fraction_rng, &fw);
  const Matrix sa = nets::join_state_action(states, actions);
  return cost_forward(cost_, sa, iqn ? &fr : nullptr, iqn ? &fw : nullptr, rho, false).tail.value;
}

UpdateStats Agent::update(const Batch& batch, Rng& action_rng, Rng& fraction_rng) {
  UpdateStats st;
  const PolicyBatchSample next = sample_policy_batch(policy_, batch.next_states, action_rng);
  st.cost_losses = cost_critic_update(batch, next, fraction_rng);
  st.reward_loss = reward_critic_update(batch, next);
  const ActorResult actor = actor_update(batch, action_rng, fraction_rng);
  st.actor_loss = actor.loss;
  st.mean_tail_cost = actor.tail_costs.size() ? actor.tail_costs.mean() : 0.0;
  lagrangian_update(actor.tail_costs);
  entropy_update(actor.log_probs);
  ++gradient_steps_;
  if (gradient_steps_ % config_.target_update_freq == 0) {
    update_targets();
    st.targets_updated = true;
  }
  st.lambda = lagrangian_.lambda;
  st.temperature = entropy_.temperature();
  return st;
}

nn::ParamArchive Agent::to_archive(std::string metadata) const {
  nn::ParamArchive ar;
  ar.metadata = std::move(metadata);
  push_network(ar, "policy", policy_.spec(), policy_.params());
  push_network(ar, "policy.adam_m", policy_.spec(), policy_adam_.first_moment);
  push_network(ar, "policy.adam_v", policy_.spec(), policy_adam_.second_moment);
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string p = "reward." + std::to_string(i);
    push_network(ar, p, reward_.spec, reward_.online[i]);
    push_network(ar, p + ".target", reward_.spec, reward_.target[i]);
    push_network(ar, p + ".adam_m", reward_.spec, reward_adam_[i].first_moment);
    push_network(ar, p + ".adam_v", reward_.spec, reward_adam_[i].second_moment);
  }
  for (std::size_t e = 0; e < cost_.online.size(); ++e) {
    const std::string p = "cost." + std::to_string(e);
    push_member(ar, cost_.critic, p, cost_.online[e]);
    push_member(ar, cost_.critic, p + ".target", cost_.target[e]);
    push_member(ar, cost_.critic, p + ".adam_m", cost_adam_[e].first_moment);
    push_member(ar, cost_.critic, p + ".adam_v", cost_adam_[e].second_moment);
  }

  ParamSet& s = ar.scalars;
  s.append(scalar("lambda", lagrangian_.lambda));
  s.append(scalar("log_alpha", entropy_.log_alpha));
  s.append(scalar("gradient_steps", static_cast<double>(gradient_steps_)));
  s.append(scalar("policy.adam_step", static_cast<double>(policy_adam_.step)));
  for (std::size_t i = 0; i < 2; ++i) {
    s.append(scalar("reward." + std::to_string(i) + ".adam_step", static_cast<double>(reward_adam_[i].step)));
  }
  for (std::size_t e = 0; e < cost_adam_.size(); ++e) {
    s.append(scalar("cost." + std::to_string(e) + ".adam_step", static_cast<double>(cost_adam_[e].step)));
  }
  s.append(scalar("entropy.adam_step", static_cast<double>(entropy_.adam.step)));
  s.append(scalar("entropy.adam_m", entropy_.adam.first_moment[0].value(0, 0)));
  s.append(scalar("entropy.adam_v", entropy_.adam.second_moment[0].value(0, 0)));
  return ar;
}

void Agent::load_archive(const nn::ParamArchive& ar) {
  auto step = [&](const std::string& name) { return static_cast<std::int64_t>(read_scalar(ar, name)); };

  policy_.params() = load_network(ar, "policy", policy_.spec(), policy_.params());
  policy_adam_.first_moment = load_network(ar, "policy.adam_m", policy_.spec(), policy_.params());
  policy_adam_.second_moment = load_network(ar, "policy.adam_v", policy_.spec(), policy_.params());
  policy_adam_.step = step("policy.adam_step");
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string p = "reward." + std::to_string(i);
    reward_.online[i] = load_network(ar, p, reward_.spec, reward_.online[i]);
    reward_.target[i] = load_network(ar, p + ".target", reward_.spec, reward_.online[i]);
    reward_adam_[i].first_moment = load_network(ar, p + ".adam_m", reward_.spec, reward_.online[i]);
    reward_adam_[i].second_moment = load_network(ar, p + ".adam_v", reward_.spec, reward_.online[i]);
    reward_adam_[i].step = step(p + ".adam_step");
  }
  for (std::size_t e = 0; e < cost_.online.size(); ++e) {
    const std::string p = "cost." + std::to_string(e);
    cost_.online[e] = load_member(ar, cost_.critic, p, cost_.online[e]);
    cost_.target[e] = load_member(ar, cost_.critic, p + ".target", cost_.online[e]);
    cost_adam_[e].first_moment = load_member(ar, cost_.critic, p + ".adam_m", cost_.online[e]);
    cost_adam_[e].second_moment = load_member(ar, cost_.critic, p + ".adam_v", cost_.online[e]);
    cost_adam_[e].step = step(p + ".adam_step");
  }
  lagrangian_.lambda = read_scalar(ar, "lambda");
  entropy_.log_alpha = read_scalar(ar, "log_alpha");
  gradient_steps_ = step("gradient_steps");
  entropy_.adam.step = step("entropy.adam_step");
  entropy_.adam.first_moment[0].value(0, 0) = read_scalar(ar, "entropy.adam_m");
  entropy_.adam.second_moment[0].value(0, 0) = read_scalar(ar, "entropy.adam_v");
}

}  // namespace oraclab::agents
