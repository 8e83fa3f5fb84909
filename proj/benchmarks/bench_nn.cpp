#include "oraclab/nn.hpp"

#include <benchmark/benchmark.h>

using namespace oraclab::nn;

namespace {

MlpSpec spec(bool layer_norm) {
  MlpSpec s;
  s.input_dim = 4;
  s.output_dim = 32;
  s.hidden = {64, 64};
  s.layer_norm = layer_norm;
  s.init_seed = 1;
  return s;
}

void BM_MlpForward(benchmark::State& state) {
  const MlpSpec s = spec(state.range(1) != 0);
  const ParamSet p = init_params(s);
  const Matrix x = Matrix::Random(s.input_dim, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forward(s, p.view(), x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->ArgsProduct({{1, 64, 256}, {0, 1}});

void BM_MlpForwardBackward(benchmark::State& state) {
  const MlpSpec s = spec(state.range(1) != 0);
  const ParamSet p = init_params(s);
  const Matrix x = Matrix::Random(s.input_dim, state.range(0));
  const Matrix up = Matrix::Random(s.output_dim, state.range(0));
  for (auto _ : state) {
    ForwardCache cache;
    forward(s, p.view(), x, &cache);
    benchmark::DoNotOptimize(backward(s, p.view(), cache, up));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBackward)->ArgsProduct({{1, 64, 256}, {0, 1}});

void BM_AdamStep(benchmark::State& state) {
  const MlpSpec s = spec(true);
  ParamSet p = init_params(s);
  AdamState adam = AdamState::for_params(p, 3e-4);
  ParamSet g = p.zeros_like();
  for (auto& a : g.arrays()) a.value.setConstant(1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(adam_step(adam, p, g));
}
BENCHMARK(BM_AdamStep);

}  // namespace
