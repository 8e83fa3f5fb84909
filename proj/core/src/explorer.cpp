#include "oraclab/explorer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oraclab::explore {

void ExploreConfig::validate() const {
  if (!(beta_r >= 0.0) || !std::isfinite(beta_r)) throw std::domain_error("beta_r must be >= 0");
  if (!(beta_c >= 0.0) || !std::isfinite(beta_c)) throw std::domain_error("beta_c must be >= 0");
  if (!(delta0 >= 0.0) || !std::isfinite(delta0)) throw std::domain_error("delta must be >= 0");
  if (horizon < 1) throw std::domain_error("delta decay horizon must be >= 1");
}

double ExploreConfig::delta(std::int64_t step) const {
  const double frac = static_cast<double>(step) / static_cast<double>(horizon);
  return delta0 * std::max(0.0, 1.0 - frac);
}

double reward_upper_bound(double q1, double q2, double beta_r) {
  return 0.5 * (q1 + q2) + beta_r * 0.5 * std::abs(q1 - q2);
}

namespace {

struct LowerBound {
  Vector mean;
  Vector std;
  Vector value;
};

LowerBound lower_bound_unsorted(const Matrix& q, double beta_c) {
  if (q.rows() < 1 || q.cols() < 1) throw std::invalid_argument("lower bound needs a non-empty E x K matrix");
  LowerBound lb;
  lb.mean = q.colwise().mean().transpose();
  lb.std.resize(q.cols());
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    lb.std[k] = std::sqrt((q.col(k).array() - lb.mean[k]).square().mean());
  }
  lb.value = lb.mean - beta_c * lb.std;
  return lb;
}

std::vector<Eigen::Index> ascending_order(const Vector& v) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return v[i] < v[j]; });
  return order;
}

}  // namespace

risk::QuantileVector cost_quantile_lower_bound(const Matrix& ensemble_q, double beta_c) {
  return cost_quantile_lower_bound(ensemble_q, beta_c,
                                   risk::uniform_midpoints(static_cast<std::size_t>(ensemble_q.cols())));
}

risk::QuantileVector cost_quantile_lower_bound(const Matrix& ensemble_q, double beta_c,
                                               std::vector<double> fractions) {
  const LowerBound lb = lower_bound_unsorted(ensemble_q, beta_c);
  std::vector<double> values(lb.value.data(), lb.value.data() + lb.value.size());
  std::sort(values.begin(), values.end());
  return risk::QuantileVector(std::move(values), std::move(fractions));
}

double optimistic_cvar(const risk::QuantileVector& lower_bound, double rho) {
  return risk::cvar_tail_mean(lower_bound, rho);
}

double adjusted_lambda(double lambda, double c_bar, double q_hat_c) {
  return std::max(0.0, lambda - (c_bar - q_hat_c));
}

ShiftedMean shifted_mean(const Vector& mu, const Vector& sigma, const Vector& grad, double delta) {
  if (mu.size() != sigma.size() || mu.size() != grad.size()) {
    throw std::invalid_argument("shifted_mean: dimension mismatch");
  }
  ShiftedMean out{mu, false};
  if (!grad.allFinite() || !sigma.allFinite()) {
    out.fault = true;
    return out;
  }
  const Vector sigma_g = sigma.array().square() * grad.array();
  const double norm = std::sqrt(grad.dot(sigma_g));
  if (!std::isfinite(norm)) {
    out.fault = true;
    return out;
  }
  if (norm < 1e-12 || delta == 0.0) return out;
  out.mean = mu + (delta / norm) * sigma_g;
  return out;
}

namespace {

// d(optimistic objective)/d(action) terms, filled by objective_gradient.
struct ObjectiveGrad {
  Vector d_action;
  double q_hat_r = 0.0;
  double q_hat_c = 0.0;
  double lambda_bar = 0.0;
};

ObjectiveGrad objective_gradient(const Vector& state, const Vector& action, const ExploreNets& nets, double lambda,
                                 double c_bar, const risk::RiskSpec& risk, const ExploreConfig& config,
                                 Rng& fraction_rng) {
  const Eigen::Index s_dim = state.size();
  const Eigen::Index a_dim = action.size();
  Vector sa_vec(s_dim + a_dim);
  sa_vec << state, action;
  const Matrix sa = sa_vec;

  ObjectiveGrad out;

  // Reward upper bound.
  std::array<nn::ForwardCache, 2> rc;
  std::array<double, 2> q{};
  for (std::size_t i = 0; i < 2; ++i) {
    q[i] = nn::forward(nets.reward.spec, nets.reward.online[i].view(), sa, &rc[i])(0, 0);
  }
  out.q_hat_r = reward_upper_bound(q[0], q[1], config.beta_r);
  const double sgn = (q[0] > q[1]) - (q[0] < q[1]);
  const std::array<double, 2> dr = {0.5 + 0.5 * config.beta_r * sgn, 0.5 - 0.5 * config.beta_r * sgn};
  Vector grad_r = Vector::Zero(a_dim);
  for (std::size_t i = 0; i < 2; ++i) {
    const Matrix up = Matrix::Constant(1, 1, dr[i]);
    const Matrix gin = nn::backward(nets.reward.spec, nets.reward.online[i].view(), rc[i], up, false).input;
    grad_r += gin.col(0).tail(a_dim);
  }

  // Cost lower bound and its tail.
  const auto& critic = nets.cost.critic;
  const int members = nets.cost.members();
  Matrix fractions;
  std::vector<double> weights;
  if (critic.mode() == risk::CriticMode::IQN) {
    const nets::IqnFractions f = nets::iqn_fractions(critic.config().quantiles, risk.rho, fraction_rng);
    fractions = Eigen::Map<const Vector>(f.midpoints.data(), static_cast<Eigen::Index>(f.midpoints.size()));
    weights = f.weights;
  }
  std::vector<nets::QuantileCache> caches(static_cast<std::size_t>(members));
  Matrix qe;
  for (int e = 0; e < members; ++e) {
    const Matrix col = critic.forward(nets.cost.online[static_cast<std::size_t>(e)], sa,
                                      fractions.size() ? &fractions : nullptr, &caches[static_cast<std::size_t>(e)]);
    if (e == 0) qe.resize(members, col.rows());
    qe.row(e) = col.col(0).transpose();
  }
  const Eigen::Index k = qe.cols();
  if (critic.mode() == risk::CriticMode::FixedFraction) {
    const std::size_t first = risk::tail_start_index(nets.cost.fractions, risk.rho);
    weights.assign(static_cast<std::size_t>(k), 0.0);
    for (std::size_t pos = first; pos < weights.size(); ++pos) {
      weights[pos] = 1.0 / static_cast<double>(weights.size() - first);
    }
  }
  const LowerBound lb = lower_bound_unsorted(qe, config.beta_c);
  const auto order = ascending_order(lb.value);
  Vector d_lb = Vector::Zero(k);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out.q_hat_c += weights[pos] * lb.value[order[pos]];
    d_lb[order[pos]] = weights[pos];
  }
  out.lambda_bar = adjusted_lambda(lambda, c_bar, out.q_hat_c);

  Vector grad_c = Vector::Zero(a_dim);
  if (out.lambda_bar > 0.0) {
    const double inv_e = 1.0 / static_cast<double>(members);
    for (int e = 0; e < members; ++e) {
      Matrix up(k, 1);
      for (Eigen::Index j = 0; j < k; ++j) {
        double d = inv_e;
        if (lb.std[j] > 0.0) d -= config.beta_c * (qe(e, j) - lb.mean[j]) * inv_e / lb.std[j];
        up(j, 0) = d_lb[j] * d;
      }
      const auto& params = nets.cost.online[static_cast<std::size_t>(e)];
      const Matrix gin = critic.backward(params, caches[static_cast<std::size_t>(e)], up, false).input;
      grad_c += gin.col(0).tail(a_dim);
    }
  }
  out.d_action = grad_r - out.lambda_bar * grad_c;
  return out;
}

}  // namespace

ExploreResult explore_action(const Vector& state, const ExploreNets& nets, double lambda, double c_bar,
                             const risk::RiskSpec& risk, const ExploreConfig& config, std::int64_t step,
                             Rng& action_rng, Rng& fraction_rng) {
  const nets::PolicyHead head = nets.policy.head(state);
  ExploreResult r;
  r.mu_target = head.mu_pre;
  r.mu_explore = head.mu_pre;
  r.sigma = head.log_sigma.array().exp();
  r.delta = config.delta(step);
  r.gradient = Vector::Zero(head.mu_pre.size());

  if (r.delta > 0.0) {
    const Vector a0 = head.mu_pre.array().tanh();
    try {
      const ObjectiveGrad g = objective_gradient(state, a0, nets, lambda, c_bar, risk, config, fraction_rng);
      r.q_hat_r = g.q_hat_r;
      r.q_hat_c = g.q_hat_c;
      r.lambda_bar = g.lambda_bar;
      r.gradient = g.d_action.array() * (1.0 - a0.array().square());
      const ShiftedMean shift = shifted_mean(head.mu_pre, r.sigma, r.gradient, r.delta);
      r.fault = shift.fault;
      r.mu_explore = shift.mean;
      r.shifted = !shift.fault && shift.mean != head.mu_pre;
    } catch (const std::exception&) {
      r.fault = true;
    }
    if (r.fault) r.mu_explore = head.mu_pre;
  }
  r.sample = nets::sample_from_head(r.mu_explore, head.log_sigma, action_rng);
  return r;
}

}  // namespace oraclab::explore
