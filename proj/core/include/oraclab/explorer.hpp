#pragma once

// Optimistic exploration policy construction.
//
// At every environment step the target policy's mean is shifted, inside a
// KL ball of radius delta, along the gradient of an optimistic objective:
// an upper confidence bound on reward value minus an adjusted Lagrangian
// weight times a lower confidence bound on the CVaR of cost value. Actions
// are then drawn from the shifted Gaussian with the target policy's
// standard deviation. The shift lives in pre-squash space.

#include "oraclab/networks.hpp"
#include "oraclab/risk.hpp"
#include "oraclab/rng.hpp"

#include <cstdint>

namespace oraclab::explore {

using nn::Matrix;
using nn::Vector;

struct ExploreConfig {
  double beta_r = 3.0;
  double beta_c = 2.0;
  double delta0 = 4.0;
  /// Linear decay horizon in environment steps.
  std::int64_t horizon = 500'000;

  void validate() const;
  /// delta0 * max(0, 1 - step / horizon).
  double delta(std::int64_t step) const;
};

/// mean + beta_r * |q1 - q2| / 2.
double reward_upper_bound(double q1, double q2, double beta_r);

/// Per quantile index: ensemble mean minus beta_c times the population
/// standard deviation over members (rows). The result is sorted ascending
/// and paired with the given fractions (evenly spaced midpoints by default).
risk::QuantileVector cost_quantile_lower_bound(const Matrix& ensemble_q, double beta_c);
risk::QuantileVector cost_quantile_lower_bound(const Matrix& ensemble_q, double beta_c,
                                               std::vector<double> fractions);

/// Tail mean of the lower-bound quantiles.
double optimistic_cvar(const risk::QuantileVector& lower_bound, double rho);

/// max(0, lambda - (c_bar - q_hat_c)).
double adjusted_lambda(double lambda, double c_bar, double q_hat_c);

struct ShiftedMean {
  Vector mean;
  bool fault = false;  // non-finite gradient; mean is the unshifted input
};

/// mu + delta * Sigma g / ||g||_Sigma with Sigma = diag(sigma^2).
ShiftedMean shifted_mean(const Vector& mu, const Vector& sigma, const Vector& grad, double delta);

/// Network snapshot read by the explorer.
struct ExploreNets {
  const nets::GaussianPolicy& policy;
  const nets::RewardCriticPair& reward;
  const nets::CostCriticEnsemble& cost;
};

struct ExploreResult {
  nets::PolicySample sample;
  Vector mu_target;
  Vector mu_explore;
  Vector sigma;
  Vector gradient;        // pre-squash gradient of the optimistic objective
  double delta = 0.0;
  double q_hat_r = 0.0;
  double q_hat_c = 0.0;
  double lambda_bar = 0.0;
  bool shifted = false;
  bool fault = false;
};

/// Samples one exploratory action. With delta(step) = 0 this consumes the
/// action stream exactly like nets::policy_sample. `fraction_rng` is only
/// drawn from in IQN mode.
ExploreResult explore_action(const Vector& state, const ExploreNets& nets, double lambda, double c_bar,
                             const risk::RiskSpec& risk, const ExploreConfig& config, std::int64_t step,
                             Rng& action_rng, Rng& fraction_rng);

}  // namespace oraclab::explore
