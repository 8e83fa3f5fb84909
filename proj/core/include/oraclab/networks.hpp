#pragma once

// Function approximators used by the agents: a tanh-squashed Gaussian
// policy, a pair of scalar reward critics and an ensemble of quantile cost
// critics. Quantile critics run either with K fixed fraction midpoints or in
// IQN mode, where fractions are sampled per call and fed through a cosine
// embedding.

#include "oraclab/nn.hpp"
#include "oraclab/risk.hpp"
#include "oraclab/rng.hpp"

#include <array>
#include <string>
#include <vector>

namespace oraclab::nets {

using nn::Matrix;
using nn::ParamSet;
using nn::Vector;

inline constexpr double kLogSigmaMin = -20.0;
inline constexpr double kLogSigmaMax = 2.0;
/// Output-layer init scale of the policy so initial actions sit near zero.
inline constexpr double kPolicyOutputScale = 1e-2;

struct PolicyHead {
  Vector mu_pre;
  Vector log_sigma;  // clamped to [kLogSigmaMin, kLogSigmaMax]
};

struct PolicySample {
  Vector action;      // tanh(pre_squash), inside (-1, 1)
  Vector pre_squash;
  double log_prob = 0.0;
};

/// log N(u; mu, sigma) - sum log(1 - tanh(u)^2), elementwise summed.
double squashed_log_prob(const Vector& pre_squash, const Vector& mu, const Vector& log_sigma);

/// log(1 - tanh(u)^2) computed without cancellation.
double log_one_minus_tanh_sq(double u);

class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int state_dim, int action_dim, std::vector<int> hidden, bool layer_norm, std::uint64_t seed);

  int state_dim() const { return spec_.input_dim; }
  int action_dim() const { return action_dim_; }
  const nn::MlpSpec& spec() const { return spec_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  PolicyHead head(const Vector& state) const;

  struct Batch {
    Matrix mu;         // A x B
    Matrix log_sigma;  // A x B, clamped
    Matrix clamp_pass; // 1 where the raw log sigma was inside the clamp range
    nn::ForwardCache cache;
  };
  Batch evaluate(const Matrix& states) const;
  /// Parameter gradient given dL/dmu and dL/dlog_sigma (both A x B).
  ParamSet backward(const Batch& batch, const Matrix& d_mu, const Matrix& d_log_sigma) const;

 private:
  nn::MlpSpec spec_;
  ParamSet params_;
  int action_dim_ = 1;
};

/// Reparameterised sample a = tanh(mu + sigma * eps), eps ~ N(0, I).
PolicySample sample_from_head(const Vector& mu_pre, const Vector& log_sigma, Rng& rng);
PolicySample policy_sample(const GaussianPolicy& policy, const Vector& state, Rng& rng);

/// Scalar reward critics Q1, Q2 on (state, action) with target copies.
struct RewardCriticPair {
  nn::MlpSpec spec;
  std::array<ParamSet, 2> online;
  std::array<ParamSet, 2> target;

  RewardCriticPair() = default;
  RewardCriticPair(int state_dim, int action_dim, std::vector<int> hidden, bool layer_norm, std::uint64_t seed);
};

struct IqnFractions {
  std::vector<double> edges;      // N + 1 values, edges[0] = 0 (or 1 - rho), edges[N] = 1
  std::vector<double> midpoints;  // N values
  std::vector<double> weights;    // N values, normalised interval widths (sum to 1)
};

/// Sampled IQN fractions. With rho < 1 they are remapped into the worst-rho
/// tail [1 - rho, 1].
IqnFractions iqn_fractions(int n, double rho, Rng& rng);

struct QuantileCriticConfig {
  risk::CriticMode mode = risk::CriticMode::FixedFraction;
  int state_dim = 1;
  int action_dim = 1;
  int quantiles = 32;        // K in fixed mode
  int embedding_dim = 64;    // IQN cosine features and joint width
  std::vector<int> hidden{64, 64};
  bool layer_norm = false;
};

struct QuantileCache {
  nn::ForwardCache trunk;
  nn::ForwardCache embed;
  nn::ForwardCache head;
  Matrix psi;       // D x B trunk features (post-ReLU), IQN only
  Matrix phi;       // D x (B*N) fraction features (post-ReLU), IQN only
  Matrix phi_pre;   // pre-ReLU fraction features
  Matrix psi_pre;
  int fractions = 0;
};

/// One quantile network architecture (shared by all ensemble members).
class QuantileCritic {
 public:
  QuantileCritic() = default;
  explicit QuantileCritic(QuantileCriticConfig config);

  const QuantileCriticConfig& config() const { return config_; }
  risk::CriticMode mode() const { return config_.mode; }
  int input_dim() const { return config_.state_dim + config_.action_dim; }

  /// Named sub-networks and their array counts, in ParamSet order.
  std::vector<std::pair<std::string, nn::MlpSpec>> components() const;

  ParamSet init(std::uint64_t seed) const;

  /// Quantile values (N x B). `fractions` (N x B) are required in IQN mode and
  /// ignored in fixed mode, where N = K.
  Matrix forward(const ParamSet& params, const Matrix& state_action, const Matrix* fractions,
                 QuantileCache* cache = nullptr) const;
  nn::Gradients backward(const ParamSet& params, const QuantileCache& cache, const Matrix& upstream,
                         bool want_params = true) const;

 private:
  QuantileCriticConfig config_;
  nn::MlpSpec fixed_;
  nn::MlpSpec trunk_, embed_, head_;
};

struct CostCriticEnsemble {
  QuantileCritic critic;
  std::vector<ParamSet> online;
  std::vector<ParamSet> target;
  std::vector<double> fractions;  // fixed-mode midpoints

  CostCriticEnsemble() = default;
  CostCriticEnsemble(QuantileCriticConfig config, int members, std::uint64_t seed);

  int members() const { return static_cast<int>(online.size()); }
};

/// Member-by-row quantile matrix (E x K) for one state-action pair in fixed
/// mode, or at the given fractions in IQN mode.
Matrix cost_quantiles(const CostCriticEnsemble& ensemble, const Vector& state, const Vector& action,
                      const std::vector<double>* iqn_midpoints = nullptr);

/// Concatenates states (S x B) and actions (A x B).
Matrix join_state_action(const Matrix& states, const Matrix& actions);

/// Differentiable risk summary of quantile columns.
struct TailEstimate {
  Eigen::RowVectorXd value;  // per column
  Matrix weights;            // d value / d quantile, same shape as the input
};

/// Fixed-fraction tail mean: each column is sorted, then the entries whose
/// midpoint is >= 1 - rho are averaged.
TailEstimate fixed_tail(const Matrix& quantiles, std::span<const double> fractions, double rho);

/// Weighted column sums (IQN; fractions already lie in the tail and the
/// weights are the normalised fraction-interval widths).
TailEstimate weighted_tail(const Matrix& quantiles, const Matrix& weights);

}  // namespace oraclab::nets
