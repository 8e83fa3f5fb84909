#include "oraclab/risk.hpp"
#include "oraclab/rng.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

using namespace oraclab;

namespace {

std::vector<double> samples(std::size_t n) {
  Rng rng(3);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

void BM_DualCvarAtOptimalBeta(benchmark::State& state) {
  const auto x = samples(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(risk::dual_cvar(x, 0.05, risk::optimal_beta(x, 0.05)));
}
BENCHMARK(BM_DualCvarAtOptimalBeta)->Arg(100)->Arg(10'000);

void BM_CvarTailMean(benchmark::State& state) {
  auto x = samples(static_cast<std::size_t>(state.range(0)));
  std::sort(x.begin(), x.end());
  const auto q = risk::QuantileVector::uniform(x);
  for (auto _ : state) benchmark::DoNotOptimize(risk::cvar_tail_mean(q, 0.05));
}
BENCHMARK(BM_CvarTailMean)->Arg(32)->Arg(100);

void BM_QuantileHuberWithGrad(benchmark::State& state) {
  const auto x = samples(1024);
  for (auto _ : state) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += risk::quantile_huber_with_grad(x[i], (i % 32 + 0.5) / 32, 1.0).loss;
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_QuantileHuberWithGrad);

}  // namespace
