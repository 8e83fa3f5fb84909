#pragma once

// Risk-measure and quantile-regression math shared by the critics, the
// agents and the evaluator. Everything here is a pure function.
//
// Risk level convention: `rho` is the worst fraction of outcomes that the
// risk measure averages over (rho = 0.05 means "mean of the worst 5%").
// Tail formulas therefore start at fraction 1 - rho and weight by 1 / rho;
// rho = 1 reduces every estimator to the plain mean.

#include <span>
#include <string_view>
#include <vector>

namespace oraclab::risk {

enum class CriticMode { FixedFraction, IQN };

std::string_view to_string(CriticMode mode);
CriticMode critic_mode_from_string(std::string_view name);

struct RiskSpec {
  double rho = 1.0;
  CriticMode mode = CriticMode::FixedFraction;
  double kappa = 1.0;

  /// Throws std::domain_error unless 0 < rho <= 1 and kappa > 0.
  void validate() const;
};

/// K quantile values with their fraction midpoints in (0, 1).
class QuantileVector {
 public:
  QuantileVector(std::vector<double> values, std::vector<double> fractions);

  /// Evenly spaced midpoints (i + 0.5) / K.
  static QuantileVector uniform(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::span<const double> fractions() const { return fractions_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<double> fractions_;
};

/// Staircase spectrum for the linearised (dual) CVaR form.
struct SpectralParams {
  double eta1 = 0.0;
  double eta2 = 1.0;
  double beta = 0.0;
  double conj_const = 0.0;
};

/// Midpoints (i + 0.5) / k for i in [0, k).
std::vector<double> uniform_midpoints(std::size_t k);

double huber(double delta, double kappa = 1.0);
/// d huber / d delta.
double huber_grad(double delta, double kappa = 1.0);

/// |k - 1[delta < 0]| * huber(delta) / kappa.
double quantile_huber(double delta, double fraction, double kappa = 1.0);
/// d quantile_huber / d delta.
double quantile_huber_grad(double delta, double fraction, double kappa = 1.0);

struct LossAndGrad {
  double loss = 0.0;
  double grad = 0.0;
};

/// quantile_huber and quantile_huber_grad in one pass, without argument
/// checks. For inner loops over many residual pairs.
inline LossAndGrad quantile_huber_with_grad(double delta, double fraction, double kappa) noexcept {
  const double w = delta < 0.0 ? 1.0 - fraction : fraction;
  const double a = delta < 0.0 ? -delta : delta;
  if (a <= kappa) return {w * 0.5 * delta * delta / kappa, w * delta / kappa};
  return {w * (a - 0.5 * kappa), delta > 0.0 ? w : -w};
}

/// Mean of the values whose fraction midpoint is >= 1 - rho. When no midpoint
/// qualifies the highest quantile value is returned. Expects `q` sorted by
/// fraction (callers sort critic outputs first).
double cvar_tail_mean(const QuantileVector& q, double rho);

/// Indices selected by cvar_tail_mean for K evenly spaced midpoints.
/// Returned range is [first, K).
std::size_t tail_start_index(std::span<const double> fractions, double rho);

/// beta + mean((x - beta)_+) / rho.
double dual_cvar(std::span<const double> samples, double rho, double beta);

/// Empirical (1 - rho)-quantile of the samples, which minimises dual_cvar over
/// beta. Uses the sorted order statistic at index n - ceil(rho * n).
double optimal_beta(std::span<const double> samples, double rho);

/// CVaR spectrum at worst-fraction rho: eta1 = 0, eta2 = 1 / rho, and the
/// conjugate constant (1 - eta1) * beta for the given threshold.
SpectralParams discretize_cvar_spectrum(double rho, double beta = 0.0);

/// eta1 * x + (eta2 - eta1) * (x - beta)_+.
double g_beta(double x, const SpectralParams& p);

/// (1 / K) * sum_k g_beta(values[k]) + conj_const.
double spectral_risk_estimate(const QuantileVector& q, const SpectralParams& p);

/// Mean of the worst ceil(rho * n) samples. Used for episodic-cost CVaR.
double worst_fraction_mean(std::span<const double> samples, double rho);

}  // namespace oraclab::risk
