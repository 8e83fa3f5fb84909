#include "oraclab/agent.hpp"

#include <benchmark/benchmark.h>

using namespace oraclab;
using namespace oraclab::agents;

namespace {

AgentConfig maze_agent(AgentKind kind, risk::CriticMode mode) {
  AgentConfig c;
  c.kind = kind;
  c.state_dim = 2;
  c.action_dim = 2;
  c.risk = {0.05, mode, 1.0};
  return c;
}

Batch random_batch(Rng& rng, int b) {
  Batch batch;
  batch.states.resize(2, b);
  batch.next_states.resize(2, b);
  batch.actions.resize(2, b);
  batch.rewards.resize(b);
  batch.costs.resize(b);
  batch.terminated.resize(b);
  for (int j = 0; j < b; ++j) {
    for (int i = 0; i < 2; ++i) {
      batch.states(i, j) = rng.uniform(-1, 1);
      batch.next_states(i, j) = rng.uniform(-1, 1);
      batch.actions(i, j) = rng.uniform(-1, 1);
    }
    batch.rewards[j] = rng.uniform(-1, 1);
    batch.costs[j] = rng.bernoulli(0.1) ? 2.0 : 0.0;
    batch.terminated[j] = 0.0;
  }
  return batch;
}

void BM_AgentUpdate(benchmark::State& state) {
  const auto mode = state.range(1) != 0 ? risk::CriticMode::IQN : risk::CriticMode::FixedFraction;
  Agent agent(maze_agent(AgentKind::Orac, mode), 1);
  Rng data(2), action(3), fraction(4);
  const Batch batch = random_batch(data, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(agent.update(batch, action, fraction));
}
BENCHMARK(BM_AgentUpdate)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_ActExplore(benchmark::State& state) {
  const auto kind = state.range(0) != 0 ? AgentKind::Orac : AgentKind::Wcsac;
  Agent agent(maze_agent(kind, risk::CriticMode::FixedFraction), 1);
  Rng action(3), fraction(4);
  const Vector s = Vector::Constant(2, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(agent.act(s, 0, action, fraction));
}
BENCHMARK(BM_ActExplore)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace
