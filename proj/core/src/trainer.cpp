#include "oraclab/trainer.hpp"

#include "oraclab/checkpoint.hpp"
#include "oraclab/replay_buffer.hpp"

#include <json.hpp>

#include <malloc.h>

#include <stdexcept>
#include <system_error>

namespace oraclab {

namespace fs = std::filesystem;

std::string report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["episodes"] = r.episodes;
  j["mean_reward"] = r.mean_reward;
  j["mean_cost"] = r.mean_cost;
  j["cvar_cost"] = r.cvar_cost;
  j["rho"] = r.rho;
  j["episode_costs"] = r.episode_costs;
  j["episode_rewards"] = r.episode_rewards;
  j["first_actions"] = r.first_actions;
  j["path_histogram"] = {{"short", r.path_short}, {"long", r.path_long}, {"none", r.path_none}};
  j["goal_rate"] = r.goal_rate;
  j["long_path_converged"] = r.long_path_converged;
  j["steps_to_convergence"] = r.steps_to_convergence;
  return j.dump(2) + "\n";
}

std::uint64_t eval_seed(const RunConfig& config, std::int64_t eval_index) {
  return derive_seed(derive_seed(config.seed, streams::kEnv), 1'000'000 + static_cast<std::uint64_t>(eval_index));
}

namespace {

class PartialDir {
 public:
  explicit PartialDir(fs::path final_dir) : final_(std::move(final_dir)), partial_(final_) {
    partial_ += ".partial";
    if (fs::exists(final_)) throw std::invalid_argument("run directory already exists: " + final_.string());
    fs::remove_all(partial_);
    fs::create_directories(partial_ / "checkpoints");
  }
  ~PartialDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(partial_, ec);
    }
  }
  PartialDir(const PartialDir&) = delete;
  PartialDir& operator=(const PartialDir&) = delete;

  const fs::path& path() const { return partial_; }
  void commit() {
    fs::rename(partial_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path partial_;
  bool committed_ = false;
};

// Keeps batch-sized temporaries on the heap rather than in fresh mappings.
void tune_allocator() {
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 64 << 20);
    return true;
  }();
  (void)done;
}

}  // namespace

TrainResult train(const RunConfig& config, const fs::path& run_dir, const TrainHooks& hooks) {
  config.validate();
  tune_allocator();
  PartialDir dir(run_dir);
  write_file_atomic(dir.path() / "config.json", config.to_json());
  const fs::path metrics_path = dir.path() / "metrics.csv";
  metrics_init(metrics_path);

  auto env = make_environment(config);
  const EnvFactory env_factory = [&config] { return make_environment(config); };
  agents::Agent agent(config.agent_config(env->state_dim(), env->action_dim()), derive_seed(config.seed, streams::kInit));
  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_size), env->state_dim(), env->action_dim());

  Rng env_rng(derive_seed(config.seed, streams::kEnv));
  Rng action_rng(derive_seed(config.seed, streams::kAction));
  // Quantile-fraction draws (IQN mode only) come from a sub-stream of the
  // action stream.
  Rng fraction_rng(derive_seed(derive_seed(config.seed, streams::kAction), 1));
  Rng buffer_rng(derive_seed(config.seed, streams::kBuffer));

  ConvergenceDetector detector;
  TrainResult result;
  std::int64_t eval_index = 0;
  auto current_delta = [&](std::int64_t step) {
    return agent.kind() == agents::AgentKind::Orac ? agent.config().explore.delta(step) : 0.0;
  };
  auto run_eval = [&](std::int64_t step) {
    EvalReport report =
        evaluate(agent.policy(), env_factory, config.eval_episodes, config.rho, eval_seed(config, eval_index++),
                 config.eval_workers);
    report.step = step;
    return report;
  };
  auto save_checkpoint = [&](std::int64_t step) {
    checkpoint_save(dir.path() / "checkpoints" / ("step_" + std::to_string(step)), agent, config);
  };

  EvalReport last_report;
  bool last_is_current = false;
  envs::Vector state = env->reset(env_rng);
  for (std::int64_t t = 0; t < config.total_steps; ++t) {
    envs::Vector action;
    if (t < config.learning_starts) {
      action.resize(env->action_dim());
      for (Eigen::Index i = 0; i < action.size(); ++i) action[i] = action_rng.uniform(-1.0, 1.0);
    } else {
      action = agent.act(state, t, action_rng, fraction_rng).sample.action;
    }
    const envs::CmdpStep step = env->step(action, env_rng);
    buffer.push({state, action, step.reward, step.cost, step.next_state, step.terminated});
    if (step.terminated || step.truncated) {
      ++result.episodes;
      state = env->reset(env_rng);
    } else {
      state = step.next_state;
    }

    const std::int64_t done = t + 1;
    if (done > config.learning_starts && buffer.size() >= static_cast<std::size_t>(config.batch_size)) {
      for (int u = 0; u < config.updates_per_step; ++u) {
        agent.update(buffer.sample(static_cast<std::size_t>(config.batch_size), buffer_rng), action_rng, fraction_rng);
      }
    }

    last_is_current = false;
    if (done % config.eval_every == 0) {
      last_report = run_eval(done);
      detector.observe(last_report);
      last_is_current = true;
      const MetricsRow row = MetricsRow::from_report(last_report, result.episodes, agent.lagrangian().lambda,
                                                     agent.entropy().temperature(), current_delta(done));
      metrics_append(metrics_path, row);
      if (hooks.on_eval) hooks.on_eval(row);
    }
    if (config.checkpoint_every > 0 && done % config.checkpoint_every == 0 && done != config.total_steps) {
      save_checkpoint(done);
    }
  }

  if (!last_is_current) {
    last_report = run_eval(config.total_steps);
    last_report.long_path_converged = detector.converged();
    last_report.steps_to_convergence = detector.steps_to_convergence();
  }
  save_checkpoint(config.total_steps);

  result.final_report = last_report;
  result.gradient_steps = agent.gradient_steps();
  result.faults = agent.faults().count;
  result.converged = detector.converged();
  result.steps_to_convergence = detector.steps_to_convergence();

  nlohmann::json summary = nlohmann::json::parse(report_to_json(last_report));
  summary["training_episodes"] = result.episodes;
  summary["gradient_steps"] = result.gradient_steps;
  summary["faults"] = result.faults;
  summary["lambda"] = agent.lagrangian().lambda;
  summary["entropy_temp"] = agent.entropy().temperature();
  write_file_atomic(dir.path() / "result.json", summary.dump(2) + "\n");

  dir.commit();
  result.run_dir = run_dir;
  return result;
}

}  // namespace oraclab
