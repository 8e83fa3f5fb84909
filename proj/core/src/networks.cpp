#include "oraclab/networks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace oraclab::nets {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

std::vector<int> tail_of(const std::vector<int>& v) {
  return v.size() > 1 ? std::vector<int>(v.begin() + 1, v.end()) : std::vector<int>{};
}

}  // namespace

double log_one_minus_tanh_sq(double u) {
  const double a = std::abs(u);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

double squashed_log_prob(const Vector& pre_squash, const Vector& mu, const Vector& log_sigma) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < pre_squash.size(); ++i) {
    const double z = (pre_squash[i] - mu[i]) * std::exp(-log_sigma[i]);
    lp += -0.5 * z * z - log_sigma[i] - kHalfLog2Pi - log_one_minus_tanh_sq(pre_squash[i]);
  }
  return lp;
}

GaussianPolicy::GaussianPolicy(int state_dim, int action_dim, std::vector<int> hidden, bool layer_norm,
                               std::uint64_t seed)
    : action_dim_(action_dim) {
  spec_.input_dim = state_dim;
  spec_.output_dim = 2 * action_dim;
  spec_.hidden = std::move(hidden);
  spec_.layer_norm = layer_norm;
  spec_.init_seed = seed;
  spec_.output_scale = kPolicyOutputScale;
  params_ = nn::init_params(spec_);
}

PolicyHead GaussianPolicy::head(const Vector& state) const {
  const Vector out = nn::forward(spec_, params_, state);
  PolicyHead h;
  h.mu_pre = out.head(action_dim_);
  h.log_sigma = out.tail(action_dim_).cwiseMax(kLogSigmaMin).cwiseMin(kLogSigmaMax);
  return h;
}

GaussianPolicy::Batch GaussianPolicy::evaluate(const Matrix& states) const {
  Batch b;
  const Matrix out = nn::forward(spec_, params_.view(), states, &b.cache);
  b.mu = out.topRows(action_dim_);
  const Matrix raw = out.bottomRows(action_dim_);
  b.log_sigma = raw.cwiseMax(kLogSigmaMin).cwiseMin(kLogSigmaMax);
  b.clamp_pass = ((raw.array() >= kLogSigmaMin) && (raw.array() <= kLogSigmaMax)).cast<double>().matrix();
  return b;
}

ParamSet GaussianPolicy::backward(const Batch& batch, const Matrix& d_mu, const Matrix& d_log_sigma) const {
  Matrix upstream(2 * action_dim_, d_mu.cols());
  upstream.topRows(action_dim_) = d_mu;
  upstream.bottomRows(action_dim_) = d_log_sigma.cwiseProduct(batch.clamp_pass);
  return nn::backward(spec_, params_.view(), batch.cache, upstream, true).params;
}

PolicySample sample_from_head(const Vector& mu_pre, const Vector& log_sigma, Rng& rng) {
  PolicySample s;
  s.pre_squash.resize(mu_pre.size());
  for (Eigen::Index i = 0; i < mu_pre.size(); ++i) {
    s.pre_squash[i] = mu_pre[i] + std::exp(log_sigma[i]) * rng.normal();
  }
  s.action = s.pre_squash.array().tanh();
  s.log_prob = squashed_log_prob(s.pre_squash, mu_pre, log_sigma);
  return s;
}

PolicySample policy_sample(const GaussianPolicy& policy, const Vector& state, Rng& rng) {
  const PolicyHead h = policy.head(state);
  return sample_from_head(h.mu_pre, h.log_sigma, rng);
}

RewardCriticPair::RewardCriticPair(int state_dim, int action_dim, std::vector<int> hidden, bool layer_norm,
                                   std::uint64_t seed) {
  spec.input_dim = state_dim + action_dim;
  spec.output_dim = 1;
  spec.hidden = std::move(hidden);
  spec.layer_norm = layer_norm;
  for (int i = 0; i < 2; ++i) {
    spec.init_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    online[i] = nn::init_params(spec);
    target[i] = online[i];
  }
  spec.init_seed = seed;
}

IqnFractions iqn_fractions(int n, double rho, Rng& rng) {
  if (n < 1) throw std::invalid_argument("iqn_fractions: N must be >= 1");
  if (!(rho > 0.0 && rho <= 1.0)) throw std::domain_error("iqn_fractions: rho must lie in (0, 1]");

  std::vector<double> eps(static_cast<std::size_t>(n));
  for (auto& e : eps) e = 1.0 - rng.uniform();  // (0, 1], keeps edges strictly increasing
  const double total = std::accumulate(eps.begin(), eps.end(), 0.0);

  IqnFractions f;
  f.edges.resize(eps.size() + 1);
  f.edges[0] = 0.0;
  double running = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    running += eps[i];
    f.edges[i + 1] = running / total;
  }
  f.edges.back() = 1.0;

  f.weights.resize(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) f.weights[i] = f.edges[i + 1] - f.edges[i];

  if (rho < 1.0) {
    for (std::size_t i = 0; i + 1 < f.edges.size(); ++i) f.edges[i] = 1.0 - rho + rho * f.edges[i];
  }
  f.midpoints.resize(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) f.midpoints[i] = 0.5 * (f.edges[i] + f.edges[i + 1]);
  return f;
}

QuantileCritic::QuantileCritic(QuantileCriticConfig config) : config_(std::move(config)) {
  const int in = input_dim();
  if (config_.mode == risk::CriticMode::FixedFraction) {
    if (config_.quantiles < 1) throw std::invalid_argument("quantile critic needs K >= 1");
    fixed_ = {in, config_.quantiles, config_.hidden, config_.layer_norm, 0, 1.0};
  } else {
    if (config_.hidden.empty()) throw std::invalid_argument("IQN critic needs at least one hidden layer");
    const int d = config_.embedding_dim;
    trunk_ = {in, d, {config_.hidden.front()}, config_.layer_norm, 0, 1.0};
    embed_ = {d, d, {}, false, 0, 1.0};
    head_ = {d, 1, tail_of(config_.hidden), config_.layer_norm, 0, 1.0};
  }
}

std::vector<std::pair<std::string, nn::MlpSpec>> QuantileCritic::components() const {
  if (config_.mode == risk::CriticMode::FixedFraction) return {{"net", fixed_}};
  return {{"trunk", trunk_}, {"embed", embed_}, {"head", head_}};
}

ParamSet QuantileCritic::init(std::uint64_t seed) const {
  ParamSet out;
  std::uint64_t stream = 0;
  for (auto [name, spec] : components()) {
    spec.init_seed = derive_seed(seed, stream++);
    out.append(nn::init_params(spec));
  }
  return out;
}

Matrix QuantileCritic::forward(const ParamSet& params, const Matrix& sa, const Matrix* fractions,
                               QuantileCache* cache) const {
  if (config_.mode == risk::CriticMode::FixedFraction) {
    return nn::forward(fixed_, params.view(), sa, cache ? &cache->head : nullptr);
  }
  if (fractions == nullptr || fractions->cols() != sa.cols()) {
    throw std::invalid_argument("IQN critic needs an N x B fraction matrix");
  }
  const Eigen::Index batch = sa.cols();
  const Eigen::Index n = fractions->rows();
  const Eigen::Index d = config_.embedding_dim;
  const std::size_t n_trunk = trunk_.array_count();
  const std::size_t n_embed = embed_.array_count();
  const std::size_t n_head = head_.array_count();

  Matrix psi_pre = nn::forward(trunk_, params.view(0, n_trunk), sa, cache ? &cache->trunk : nullptr);
  Matrix psi = psi_pre.cwiseMax(0.0);

  // cos(i * theta) by the Chebyshev recurrence.
  Matrix cosines(d, batch * n);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index k = 0; k < n; ++k) {
      double* col = cosines.col(b * n + k).data();
      const double c1 = std::cos(std::numbers::pi * (*fractions)(k, b));
      col[0] = 1.0;
      if (d > 1) col[1] = c1;
      for (Eigen::Index i = 2; i < d; ++i) col[i] = 2.0 * c1 * col[i - 1] - col[i - 2];
    }
  }
  Matrix phi_pre = nn::forward(embed_, params.view(n_trunk, n_embed), cosines, cache ? &cache->embed : nullptr);
  Matrix phi = phi_pre.cwiseMax(0.0);

  Matrix joint(d, batch * n);
  for (Eigen::Index b = 0; b < batch; ++b) {
    joint.middleCols(b * n, n) = phi.middleCols(b * n, n).array().colwise() * psi.col(b).array();
  }
  const Matrix out = nn::forward(head_, params.view(n_trunk + n_embed, n_head), joint, cache ? &cache->head : nullptr);

  if (cache) {
    cache->psi = std::move(psi);
    cache->psi_pre = std::move(psi_pre);
    cache->phi = std::move(phi);
    cache->phi_pre = std::move(phi_pre);
    cache->fractions = static_cast<int>(n);
  }
  return Eigen::Map<const Matrix>(out.data(), n, batch);
}

nn::Gradients QuantileCritic::backward(const ParamSet& params, const QuantileCache& cache, const Matrix& upstream,
                                       bool want_params) const {
  if (config_.mode == risk::CriticMode::FixedFraction) {
    return nn::backward(fixed_, params.view(), cache.head, upstream, want_params);
  }
  const Eigen::Index n = cache.fractions;
  const Eigen::Index batch = cache.psi.cols();
  const std::size_t n_trunk = trunk_.array_count();
  const std::size_t n_embed = embed_.array_count();
  const std::size_t n_head = head_.array_count();

  const Matrix d_out = Eigen::Map<const Matrix>(upstream.data(), 1, n * batch);
  nn::Gradients head_grads = nn::backward(head_, params.view(n_trunk + n_embed, n_head), cache.head, d_out, want_params);
  const Matrix& d_joint = head_grads.input;

  Matrix d_psi = Matrix::Zero(cache.psi.rows(), batch);
  Matrix d_phi(cache.phi.rows(), n * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto dj = d_joint.middleCols(b * n, n);
    d_phi.middleCols(b * n, n) = dj.array().colwise() * cache.psi.col(b).array();
    d_psi.col(b) = dj.cwiseProduct(cache.phi.middleCols(b * n, n)).rowwise().sum();
  }
  d_psi.array() *= (cache.psi_pre.array() > 0.0).cast<double>();
  d_phi.array() *= (cache.phi_pre.array() > 0.0).cast<double>();

  nn::Gradients trunk_grads = nn::backward(trunk_, params.view(0, n_trunk), cache.trunk, d_psi, want_params);
  nn::Gradients out;
  out.input = std::move(trunk_grads.input);
  if (want_params) {
    const nn::Gradients embed_grads =
        nn::backward(embed_, params.view(n_trunk, n_embed), cache.embed, d_phi, true);
    out.params = std::move(trunk_grads.params);
    out.params.append(embed_grads.params);
    out.params.append(head_grads.params);
  }
  return out;
}

CostCriticEnsemble::CostCriticEnsemble(QuantileCriticConfig config, int members, std::uint64_t seed)
    : critic(std::move(config)) {
  if (members < 1) throw std::invalid_argument("cost critic ensemble needs at least one member");
  for (int e = 0; e < members; ++e) {
    online.push_back(critic.init(derive_seed(seed, static_cast<std::uint64_t>(e))));
    target.push_back(online.back());
  }
  if (critic.mode() == risk::CriticMode::FixedFraction) {
    fractions = risk::uniform_midpoints(static_cast<std::size_t>(critic.config().quantiles));
  }
}

Matrix join_state_action(const Matrix& states, const Matrix& actions) {
  Matrix sa(states.rows() + actions.rows(), states.cols());
  sa.topRows(states.rows()) = states;
  sa.bottomRows(actions.rows()) = actions;
  return sa;
}

Matrix cost_quantiles(const CostCriticEnsemble& ensemble, const Vector& state, const Vector& action,
                      const std::vector<double>* iqn_midpoints) {
  Vector sa(state.size() + action.size());
  sa << state, action;
  const Matrix input = sa;
  Matrix fractions;
  if (ensemble.critic.mode() == risk::CriticMode::IQN) {
    if (iqn_midpoints == nullptr) throw std::invalid_argument("cost_quantiles: IQN mode needs fractions");
    fractions = Eigen::Map<const Vector>(iqn_midpoints->data(), static_cast<Eigen::Index>(iqn_midpoints->size()));
  }
  Matrix out;
  for (int e = 0; e < ensemble.members(); ++e) {
    const Matrix q = ensemble.critic.forward(ensemble.online[static_cast<std::size_t>(e)], input, &fractions);
    if (e == 0) out.resize(ensemble.members(), q.rows());
    out.row(e) = q.col(0).transpose();
  }
  return out;
}

TailEstimate fixed_tail(const Matrix& quantiles, std::span<const double> fractions, double rho) {
  const Eigen::Index k = quantiles.rows();
  if (static_cast<std::size_t>(k) != fractions.size()) throw std::invalid_argument("fixed_tail: K mismatch");
  const std::size_t first = risk::tail_start_index(fractions, rho);
  const double w = 1.0 / static_cast<double>(static_cast<std::size_t>(k) - first);

  TailEstimate t;
  t.value.resize(quantiles.cols());
  t.weights = Matrix::Zero(k, quantiles.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  for (Eigen::Index b = 0; b < quantiles.cols(); ++b) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    // Stable order keeps ties deterministic.
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return quantiles(i, b) < quantiles(j, b); });
    double sum = 0.0;
    for (std::size_t pos = first; pos < order.size(); ++pos) {
      sum += quantiles(order[pos], b);
      t.weights(order[pos], b) = w;
    }
    t.value[b] = sum * w;
  }
  return t;
}

TailEstimate weighted_tail(const Matrix& quantiles, const Matrix& weights) {
  if (quantiles.rows() != weights.rows() || quantiles.cols() != weights.cols()) {
    throw std::invalid_argument("weighted_tail: shape mismatch");
  }
  TailEstimate t;
  t.weights = weights;
  t.value = quantiles.cwiseProduct(weights).colwise().sum();
  return t;
}

}  // namespace oraclab::nets
