#include "oraclab/evaluation.hpp"

#include "oraclab/risk.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace oraclab {

namespace {

struct EpisodeOutcome {
  double reward = 0.0;
  double cost = 0.0;
  double first_action = 0.0;
  envs::PathClass path = envs::PathClass::None;
};

EpisodeOutcome run_episode(const nets::GaussianPolicy& policy, envs::Environment& env, std::uint64_t seed) {
  Rng rng(seed);
  EpisodeOutcome out;
  envs::Vector state = env.reset(rng);
  bool first = true;
  for (;;) {
    const envs::Vector action = policy.head(state).mu_pre.array().tanh();
    if (first) {
      out.first_action = action[0];
      first = false;
    }
    const envs::CmdpStep step = env.step(action, rng);
    out.reward += step.reward;
    out.cost += step.cost;
    state = step.next_state;
    if (step.terminated || step.truncated) break;
  }
  out.path = env.path();
  return out;
}

}  // namespace

EvalReport evaluate(const nets::GaussianPolicy& policy, const EnvFactory& make_env, int episodes, double rho,
                    std::uint64_t seed, int workers) {
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
  if (!(rho > 0.0 && rho <= 1.0)) throw std::domain_error("evaluation rho must lie in (0, 1]");
  workers = std::clamp(workers, 1, episodes);

  std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(episodes));
  auto run_range = [&](int begin, int stride) {
    const auto env = make_env();
    for (int i = begin; i < episodes; i += stride) {
      outcomes[static_cast<std::size_t>(i)] = run_episode(policy, *env, derive_seed(seed, static_cast<std::uint64_t>(i)));
    }
  };
  if (workers == 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_range, w, workers);
    for (auto& t : pool) t.join();
  }

  EvalReport r;
  r.episodes = episodes;
  r.rho = rho;
  for (const auto& o : outcomes) {
    r.episode_rewards.push_back(o.reward);
    r.episode_costs.push_back(o.cost);
    r.first_actions.push_back(o.first_action);
    switch (o.path) {
      case envs::PathClass::Short: ++r.path_short; break;
      case envs::PathClass::Long: ++r.path_long; break;
      case envs::PathClass::None: ++r.path_none; break;
    }
  }
  const double n = static_cast<double>(episodes);
  r.mean_reward = std::accumulate(r.episode_rewards.begin(), r.episode_rewards.end(), 0.0) / n;
  r.mean_cost = std::accumulate(r.episode_costs.begin(), r.episode_costs.end(), 0.0) / n;
  r.cvar_cost = risk::worst_fraction_mean(r.episode_costs, rho);
  r.goal_rate = (r.path_short + r.path_long) / n;
  return r;
}

ConvergenceDetector::ConvergenceDetector(int window) : window_(window) {
  if (window < 1) throw std::invalid_argument("convergence window must be >= 1");
}

void ConvergenceDetector::observe(EvalReport& report) {
  const bool all_long = report.episodes > 0 && report.path_long == report.episodes;
  if (all_long) {
    if (streak_ == 0) streak_start_ = report.step;
    ++streak_;
  } else {
    streak_ = 0;
    streak_start_ = -1;
  }
  if (!converged_ && streak_ >= window_) {
    converged_ = true;
    steps_ = streak_start_;
  }
  report.long_path_converged = converged_;
  report.steps_to_convergence = steps_;
}

}  // namespace oraclab
