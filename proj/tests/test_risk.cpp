#include "oraclab/risk.hpp"
#include "oraclab/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

using namespace oraclab;
using namespace oraclab::risk;

namespace {

QuantileVector q1234() { return QuantileVector({1, 2, 3, 4}, {0.125, 0.375, 0.625, 0.875}); }

// Independent oracle: sort descending and average the worst count = rho * n.
double brute_worst_mean(std::vector<double> xs, std::size_t count) {
  std::sort(xs.begin(), xs.end(), std::greater<>());
  return std::accumulate(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(count), 0.0) /
         static_cast<double>(count);
}

// Independent oracle: minimum of the dual objective over candidate betas.
double grid_min_dual(const std::vector<double>& xs, double rho, double* arg) {
  double best = std::numeric_limits<double>::infinity();
  for (double b : xs) {
    double s = 0.0;
    for (double x : xs) s += std::max(x - b, 0.0);
    const double v = b + s / static_cast<double>(xs.size()) / rho;
    if (v < best) {
      best = v;
      if (arg) *arg = b;
    }
  }
  return best;
}

}  // namespace

TEST(Huber, Examples) {
  EXPECT_DOUBLE_EQ(huber(0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(huber(0.5, 1.0), 0.125);
  EXPECT_DOUBLE_EQ(huber(2.0, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(huber(-2.0, 1.0), 1.5);
}

TEST(Huber, RejectsNonFinite) {
  EXPECT_THROW(huber(std::nan(""), 1.0), std::domain_error);
  EXPECT_THROW(huber(std::numeric_limits<double>::infinity(), 1.0), std::domain_error);
  EXPECT_THROW(huber(1.0, 0.0), std::domain_error);
}

TEST(Huber, ContinuousAtThreshold) {
  for (double k : {0.25, 1.0, 3.0}) {
    EXPECT_NEAR(huber(k - 1e-9, k), huber(k + 1e-9, k), 1e-8);
    EXPECT_NEAR(huber_grad(k - 1e-9, k), huber_grad(k + 1e-9, k), 1e-8);
  }
}

TEST(QuantileHuber, Examples) {
  EXPECT_DOUBLE_EQ(quantile_huber(1.0, 0.9, 1.0), 0.45);
  EXPECT_NEAR(quantile_huber(-1.0, 0.9, 1.0), 0.05, 1e-15);
  EXPECT_DOUBLE_EQ(quantile_huber(0.0, 0.5, 1.0), 0.0);
}

TEST(QuantileHuber, RejectsFractionOutsideUnitInterval) {
  EXPECT_THROW(quantile_huber(1.0, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(quantile_huber(1.0, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(quantile_huber(1.0, -0.2, 1.0), std::domain_error);
}

TEST(QuantileHuber, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  const double h = 1e-5;
  for (int i = 0; i < 2000; ++i) {
    const double kappa = rng.uniform(0.1, 3.0);
    const double k = rng.uniform(0.01, 0.99);
    double d = rng.uniform(-6.0, 6.0);
    if (std::abs(d) < 1e-3) d = 0.5;
    // Stay clear of the kink at |delta| = kappa where the second derivative jumps.
    if (std::abs(std::abs(d) - kappa) < 1e-3) d += 0.01;
    const double fd = (quantile_huber(d + h, k, kappa) - quantile_huber(d - h, k, kappa)) / (2 * h);
    EXPECT_NEAR(quantile_huber_grad(d, k, kappa), fd, 1e-6) << d << " " << k << " " << kappa;
  }
}

TEST(QuantileHuber, FusedFormMatchesCheckedFunctions) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double kappa = rng.uniform(0.1, 2.0);
    const double k = rng.uniform(0.01, 0.99);
    const double d = rng.uniform(-5.0, 5.0);
    const LossAndGrad lg = quantile_huber_with_grad(d, k, kappa);
    EXPECT_NEAR(lg.loss, quantile_huber(d, k, kappa), 1e-14);
    EXPECT_NEAR(lg.grad, quantile_huber_grad(d, k, kappa), 1e-14);
  }
}

TEST(CvarTailMean, Examples) {
  EXPECT_DOUBLE_EQ(cvar_tail_mean(q1234(), 0.5), 3.5);
  EXPECT_DOUBLE_EQ(cvar_tail_mean(q1234(), 1.0), 2.5);
  EXPECT_DOUBLE_EQ(cvar_tail_mean(q1234(), 0.05), 4.0);
}

TEST(CvarTailMean, EmptyVectorIsDomainError) {
  EXPECT_THROW(QuantileVector({}, {}), std::domain_error);
}

TEST(QuantileVector, RejectsBadFractions) {
  EXPECT_THROW(QuantileVector({1, 2}, {0.5, 0.25}), std::domain_error);
  EXPECT_THROW(QuantileVector({1, 2}, {0.0, 0.5}), std::domain_error);
  EXPECT_THROW(QuantileVector({1, 2}, {0.5}), std::domain_error);
}

TEST(CvarTailMean, MonotoneInEveryValue) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + rng.index(40);
    std::vector<double> v(k);
    for (auto& x : v) x = rng.uniform(-10, 10);
    std::sort(v.begin(), v.end());
    const double rho = rng.uniform(0.01, 1.0);
    const double base = cvar_tail_mean(QuantileVector::uniform(v), rho);
    const std::size_t i = rng.index(k);
    auto w = v;
    w[i] += rng.uniform(0.0, 3.0);
    std::sort(w.begin(), w.end());
    EXPECT_GE(cvar_tail_mean(QuantileVector::uniform(w), rho), base - 1e-12);
  }
}

TEST(CvarTailMean, CoherenceSandwich) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng.index(64);
    std::vector<double> v(k);
    for (auto& x : v) x = rng.uniform(-5, 50);
    std::sort(v.begin(), v.end());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(k);
    const double rho = rng.uniform(1e-3, 1.0);
    const double c = cvar_tail_mean(QuantileVector::uniform(v), rho);
    EXPECT_LE(mean, c + 1e-12);
    EXPECT_LE(c, v.back() + 1e-12);
  }
}

TEST(DualCvar, Examples) {
  EXPECT_DOUBLE_EQ(dual_cvar(std::vector<double>{0, 10}, 0.5, 0.0), 10.0);
  EXPECT_DOUBLE_EQ(dual_cvar(std::vector<double>{5}, 1.0, 5.0), 5.0);
  EXPECT_DOUBLE_EQ(dual_cvar(std::vector<double>{1, 2, 3, 4}, 0.25, 3.0), 4.0);
  EXPECT_THROW(dual_cvar(std::vector<double>{}, 0.5, 0.0), std::domain_error);
}

TEST(OptimalBeta, MatchesGridSearch) {
  const std::vector<double> a{1, 2, 3, 4};
  double arg = 0.0;
  const double min_a = grid_min_dual(a, 0.25, &arg);
  EXPECT_DOUBLE_EQ(optimal_beta(a, 0.25), 4.0);
  EXPECT_DOUBLE_EQ(min_a, 4.0);
  EXPECT_DOUBLE_EQ(dual_cvar(a, 0.25, optimal_beta(a, 0.25)), 4.0);

  const std::vector<double> b{0, 10};
  EXPECT_DOUBLE_EQ(optimal_beta(b, 0.5), 10.0);
  EXPECT_DOUBLE_EQ(dual_cvar(b, 0.5, 10.0), grid_min_dual(b, 0.5, nullptr));
  EXPECT_DOUBLE_EQ(dual_cvar(b, 0.5, 10.0), 10.0);
}

TEST(OptimalBeta, DegenerateSamples) {
  const std::vector<double> c(17, 3.25);
  for (double rho : {0.05, 0.3, 1.0}) EXPECT_DOUBLE_EQ(optimal_beta(c, rho), 3.25);
  EXPECT_THROW(optimal_beta(std::vector<double>{}, 0.5), std::domain_error);
}

TEST(DualCvar, AgreesWithBruteForceOnExactMultiples) {
  Rng rng(13);
  for (double rho : {0.05, 0.25, 0.5, 1.0}) {
    const auto per = static_cast<std::size_t>(std::llround(1.0 / rho));
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = per * (1 + rng.index(20));
      std::vector<double> xs(n);
      for (auto& x : xs) x = rng.uniform(-3, 30);
      const auto count = static_cast<std::size_t>(std::llround(rho * static_cast<double>(n)));
      EXPECT_NEAR(dual_cvar(xs, rho, optimal_beta(xs, rho)), brute_worst_mean(xs, count), 1e-9);
      EXPECT_NEAR(worst_fraction_mean(xs, rho), brute_worst_mean(xs, count), 1e-9);
    }
  }
}

TEST(DualCvar, OptimalBetaMinimisesDual) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(60);
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.uniform(0, 10);
    const double rho = rng.uniform(0.02, 1.0);
    EXPECT_NEAR(dual_cvar(xs, rho, optimal_beta(xs, rho)), grid_min_dual(xs, rho, nullptr), 1e-9);
  }
}

TEST(Discretize, Examples) {
  const SpectralParams half = discretize_cvar_spectrum(0.5);
  EXPECT_DOUBLE_EQ(half.eta1, 0.0);
  EXPECT_DOUBLE_EQ(half.eta2, 2.0);
  const SpectralParams quarter = discretize_cvar_spectrum(0.25);
  EXPECT_DOUBLE_EQ(quarter.eta1, 0.0);
  EXPECT_DOUBLE_EQ(quarter.eta2, 4.0);
  EXPECT_NEAR(discretize_cvar_spectrum(1.0 - 1e-9).eta2, 1.0, 1e-8);
  EXPECT_THROW(discretize_cvar_spectrum(0.0), std::domain_error);
  EXPECT_THROW(discretize_cvar_spectrum(1.0), std::domain_error);
}

TEST(GBeta, Examples) {
  SpectralParams p{0.0, 2.0, 5.0, 0.0};
  EXPECT_DOUBLE_EQ(g_beta(3.0, p), 0.0);
  EXPECT_DOUBLE_EQ(g_beta(7.0, p), 4.0);
  SpectralParams q{0.3, 1.7, -2.0, 0.0};
  EXPECT_DOUBLE_EQ(g_beta(q.beta, q), q.eta1 * q.beta);
}

TEST(SpectralEstimate, Examples) {
  const std::vector<double> v{1, 2, 3, 4};
  const double beta = optimal_beta(v, 0.25);
  EXPECT_DOUBLE_EQ(spectral_risk_estimate(QuantileVector::uniform(v), discretize_cvar_spectrum(0.25, beta)), 4.0);

  const double c = 2.5;
  const SpectralParams p = discretize_cvar_spectrum(0.3, c);
  EXPECT_DOUBLE_EQ(spectral_risk_estimate(QuantileVector::uniform({c, c, c}), p), p.eta1 * c + p.conj_const);

  // Risk-neutral staircase with beta below every value reduces to the mean.
  const SpectralParams neutral{0.0, 1.0, -100.0, -100.0};
  EXPECT_NEAR(spectral_risk_estimate(QuantileVector::uniform(v), neutral), 2.5, 1e-12);
}

TEST(SpectralEstimate, EqualsTailMeanWhenKRhoIsInteger) {
  Rng rng(19);
  for (double rho : {0.05, 0.25, 0.5}) {
    const auto per = static_cast<std::size_t>(std::llround(1.0 / rho));
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t k = per * (1 + rng.index(8));
      std::vector<double> v(k);
      for (auto& x : v) x = rng.uniform(-4, 25);
      std::sort(v.begin(), v.end());
      const QuantileVector q = QuantileVector::uniform(v);
      const SpectralParams p = discretize_cvar_spectrum(rho, optimal_beta(v, rho));
      EXPECT_NEAR(spectral_risk_estimate(q, p), cvar_tail_mean(q, rho), 1e-6);
    }
  }
}

TEST(RiskSpec, Validation) {
  EXPECT_NO_THROW((RiskSpec{1.0, CriticMode::FixedFraction, 1.0}.validate()));
  EXPECT_THROW((RiskSpec{0.0, CriticMode::FixedFraction, 1.0}.validate()), std::domain_error);
  EXPECT_THROW((RiskSpec{1.5, CriticMode::FixedFraction, 1.0}.validate()), std::domain_error);
  EXPECT_THROW((RiskSpec{0.5, CriticMode::IQN, 0.0}.validate()), std::domain_error);
  EXPECT_EQ(critic_mode_from_string(to_string(CriticMode::IQN)), CriticMode::IQN);
}

TEST(RiskSpec, RhoOneReducesToMean) {
  Rng rng(23);
  std::vector<double> v(12);
  for (auto& x : v) x = rng.uniform(0, 9);
  std::sort(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 12.0;
  EXPECT_NEAR(cvar_tail_mean(QuantileVector::uniform(v), 1.0), mean, 1e-12);
  EXPECT_NEAR(dual_cvar(v, 1.0, optimal_beta(v, 1.0)), mean, 1e-12);
  EXPECT_NEAR(worst_fraction_mean(v, 1.0), mean, 1e-12);
}
