#include "oraclab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace oraclab::risk {

namespace {

// Midpoints that sit exactly on the tail boundary count as tail members.
constexpr double kFractionSlack = 1e-12;

void require_rho(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::domain_error("risk level rho must lie in (0, 1], got " + std::to_string(rho));
  }
}

void require_kappa(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw std::domain_error("huber threshold kappa must be positive, got " + std::to_string(kappa));
  }
}

}  // namespace

std::string_view to_string(CriticMode mode) {
  return mode == CriticMode::IQN ? "iqn" : "fixed";
}

CriticMode critic_mode_from_string(std::string_view name) {
  if (name == "fixed" || name == "fixed-fraction") return CriticMode::FixedFraction;
  if (name == "iqn") return CriticMode::IQN;
  throw std::invalid_argument("unknown critic mode '" + std::string(name) + "'");
}

void RiskSpec::validate() const {
  require_rho(rho);
  require_kappa(kappa);
}

QuantileVector::QuantileVector(std::vector<double> values, std::vector<double> fractions)
    : values_(std::move(values)), fractions_(std::move(fractions)) {
  if (values_.empty()) throw std::domain_error("quantile vector must not be empty");
  if (values_.size() != fractions_.size()) {
    throw std::domain_error("quantile values and fractions differ in length");
  }
  for (std::size_t i = 0; i < fractions_.size(); ++i) {
    if (!(fractions_[i] > 0.0 && fractions_[i] < 1.0)) {
      throw std::domain_error("quantile fractions must lie in (0, 1)");
    }
    if (i > 0 && !(fractions_[i] > fractions_[i - 1])) {
      throw std::domain_error("quantile fractions must be strictly increasing");
    }
  }
}

QuantileVector QuantileVector::uniform(std::vector<double> values) {
  auto fractions = uniform_midpoints(values.size());
  return QuantileVector(std::move(values), std::move(fractions));
}

std::vector<double> uniform_midpoints(std::size_t k) {
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
  }
  return out;
}

double huber(double delta, double kappa) {
  if (!std::isfinite(delta)) throw std::domain_error("huber: non-finite residual");
  require_kappa(kappa);
  const double a = std::abs(delta);
  return a <= kappa ? 0.5 * delta * delta : kappa * (a - 0.5 * kappa);
}

double huber_grad(double delta, double kappa) {
  if (std::abs(delta) <= kappa) return delta;
  return delta > 0.0 ? kappa : -kappa;
}

double quantile_huber(double delta, double fraction, double kappa) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::domain_error("quantile_huber: fraction must lie in (0, 1)");
  }
  const double weight = std::abs(fraction - (delta < 0.0 ? 1.0 : 0.0));
  return weight * huber(delta, kappa) / kappa;
}

double quantile_huber_grad(double delta, double fraction, double kappa) {
  const double weight = std::abs(fraction - (delta < 0.0 ? 1.0 : 0.0));
  return weight * huber_grad(delta, kappa) / kappa;
}

std::size_t tail_start_index(std::span<const double> fractions, double rho) {
  require_rho(rho);
  const double threshold = 1.0 - rho - kFractionSlack;
  const auto it = std::lower_bound(fractions.begin(), fractions.end(), threshold);
  const auto first = static_cast<std::size_t>(it - fractions.begin());
  // Empty tail: fall back to the highest quantile.
  return first == fractions.size() ? fractions.size() - 1 : first;
}

double cvar_tail_mean(const QuantileVector& q, double rho) {
  const auto values = q.values();
  const std::size_t first = tail_start_index(q.fractions(), rho);
  const double sum = std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(first), values.end(), 0.0);
  return sum / static_cast<double>(values.size() - first);
}

double dual_cvar(std::span<const double> samples, double rho, double beta) {
  if (samples.empty()) throw std::domain_error("dual_cvar: empty sample set");
  require_rho(rho);
  double excess = 0.0;
  for (double x : samples) excess += std::max(x - beta, 0.0);
  return excess / static_cast<double>(samples.size()) / rho + beta;
}

double optimal_beta(std::span<const double> samples, double rho) {
  if (samples.empty()) throw std::domain_error("optimal_beta: empty sample set");
  require_rho(rho);
  std::vector<double> sorted(samples.begin(), samples.end());
  const auto n = sorted.size();
  // ceil(rho * n) samples lie at or above the threshold; the slack absorbs
  // products such as 0.05 * 100 that land a hair above an integer.
  const auto tail = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n) - 1e-9));
  const std::size_t index = n - std::clamp<std::size_t>(tail, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(index), sorted.end());
  return sorted[index];
}

SpectralParams discretize_cvar_spectrum(double rho, double beta) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw std::domain_error("discretize_cvar_spectrum: rho must lie in (0, 1)");
  }
  SpectralParams p;
  p.eta1 = 0.0;
  p.eta2 = 1.0 / rho;
  p.beta = beta;
  p.conj_const = (1.0 - p.eta1) * beta;
  return p;
}

double g_beta(double x, const SpectralParams& p) {
  return p.eta1 * x + (p.eta2 - p.eta1) * std::max(x - p.beta, 0.0);
}

double spectral_risk_estimate(const QuantileVector& q, const SpectralParams& p) {
  double sum = 0.0;
  for (double v : q.values()) sum += g_beta(v, p);
  return sum / static_cast<double>(q.size()) + p.conj_const;
}

double worst_fraction_mean(std::span<const double> samples, double rho) {
  if (samples.empty()) throw std::domain_error("worst_fraction_mean: empty sample set");
  require_rho(rho);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto n = sorted.size();
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n) - 1e-9)), 1, n);
  return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(count), 0.0) /
         static_cast<double>(count);
}

}  // namespace oraclab::risk
