// oraclab: train, evaluate and sweep constrained agents.

#include "oraclab/checkpoint.hpp"
#include "oraclab/config.hpp"
#include "oraclab/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using oraclab::RunConfig;

namespace {

const std::map<std::string, std::string>& flag_help() {
  static const std::map<std::string, std::string> help = {
      {"env", "environment: guardedmaze or riskybandit"},
      {"agent", "agent: saclag, wcsac or orac (sweep: comma separated list)"},
      {"seed", "run seed (sweep: first seed)"},
      {"total-steps", "environment steps"},
      {"rho", "worst-fraction risk level in (0, 1]"},
      {"cost-limit", "cost budget c"},
      {"guard-prob", "probability the guard is present"},
      {"beta-r", "reward optimism multiplier"},
      {"beta-c", "cost optimism multiplier"},
      {"delta", "initial exploration radius"},
      {"eval-episodes", "episodes per evaluation"},
  };
  return help;
}

// Every RunConfig field is exposed as --<key>. Values are kept as text and
// applied after the config file so explicit flags win.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;

  void attach(CLI::App& app, bool agent_is_list) {
    for (const auto& key : oraclab::config_keys()) {
      const auto it = flag_help().find(key);
      std::string help = it != flag_help().end() ? it->second : "config field '" + key + "'";
      if (key == "agent" && !agent_is_list) help = "agent: saclag, wcsac or orac";
      options[key] = app.add_option("--" + key, values[key], help);
    }
    app.add_option("--config", config_file, "JSON config file (flat keys matching flag names)");
  }

  bool given(const std::string& key) const { return options.at(key)->count() > 0; }

  RunConfig resolve(const std::vector<std::string>& skip = {}) const {
    RunConfig cfg;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw std::runtime_error("cannot read config file '" + config_file + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      cfg.merge_json(ss.str());
    }
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
      cfg.set(key, values.at(key));
    }
    return cfg;
  }
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("ORACLAB_OUT"); env != nullptr && *env != '\0') return env;
  return "runs";
}

std::string run_name(const RunConfig& cfg) {
  return cfg.env + "_" + cfg.agent + "_seed" + std::to_string(cfg.seed);
}

void print_row(const oraclab::MetricsRow& row) {
  std::cerr << "step " << row.step << "  reward " << row.mean_reward << "  cost " << row.mean_cost << "  cvar "
            << row.cvar_cost << "  lambda " << row.lambda << "  paths S/L/N " << row.path_short << "/"
            << row.path_long << "/" << row.path_none << "\n";
}

int cmd_train(const ConfigFlags& flags, const fs::path& out_dir, const std::string& name, bool quiet) {
  const RunConfig cfg = flags.resolve();
  cfg.validate();
  const fs::path run_dir = out_dir / (name.empty() ? run_name(cfg) : name);
  fs::create_directories(out_dir);
  oraclab::TrainHooks hooks;
  if (!quiet) hooks.on_eval = print_row;
  const auto result = oraclab::train(cfg, run_dir, hooks);
  std::cout << result.run_dir.string() << "\n";
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& checkpoint, const std::string& output) {
  const oraclab::Checkpoint ck = oraclab::checkpoint_load(checkpoint);
  RunConfig cfg = ck.config;
  for (const char* key : {"eval-episodes", "rho", "seed", "guard-prob", "step-scale", "eval-workers"}) {
    if (flags.given(key)) cfg.set(key, flags.values.at(key));
  }
  cfg.validate();
  const auto agent = oraclab::restore_agent(ck);
  const oraclab::EnvFactory factory = [&cfg] { return oraclab::make_environment(cfg); };
  oraclab::EvalReport report = oraclab::evaluate(agent->policy(), factory, cfg.eval_episodes, cfg.rho,
                                                 oraclab::eval_seed(cfg, 0), cfg.eval_workers);
  report.step = static_cast<std::int64_t>(agent->gradient_steps());
  const std::string text = oraclab::report_to_json(report);
  if (output.empty()) {
    std::cout << text;
  } else {
    oraclab::write_file_atomic(output, text);
  }
  return 0;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct SweepRun {
  std::string agent;
  std::uint64_t seed = 0;
  fs::path dir;
};

int cmd_sweep(const ConfigFlags& flags, int seeds, int jobs, const fs::path& out_dir, const std::string& name) {
  RunConfig base = flags.resolve({"agent"});
  const std::vector<std::string> agents =
      flags.given("agent") ? split(flags.values.at("agent")) : std::vector<std::string>{"saclag", "wcsac", "orac"};
  if (agents.empty()) throw std::invalid_argument("--agent needs at least one agent");
  if (seeds < 1) throw std::invalid_argument("--seeds must be >= 1");

  const fs::path sweep_dir = out_dir / (name.empty() ? "sweep_" + base.env : name);
  fs::create_directories(sweep_dir);

  std::vector<SweepRun> runs;
  for (const auto& agent : agents) {
    for (int i = 0; i < seeds; ++i) {
      RunConfig cfg = base;
      cfg.agent = agent;
      cfg.seed = base.seed + static_cast<std::uint64_t>(i);
      cfg.validate();
      runs.push_back({agent, cfg.seed, sweep_dir / run_name(cfg)});
    }
  }

  auto run_one = [&](const SweepRun& r) {
    RunConfig cfg = base;
    cfg.agent = r.agent;
    cfg.seed = r.seed;
    if (fs::exists(r.dir / "result.json")) return;  // completed earlier
    oraclab::train(cfg, r.dir);
  };

  // Process-level parallelism keeps each run single-threaded and deterministic.
  std::size_t next = 0;
  int running = 0;
  bool failed = false;
  while (next < runs.size() || running > 0) {
    if (next < runs.size() && running < std::max(1, jobs)) {
      const SweepRun& r = runs[next++];
      std::cerr << "sweep: " << r.agent << " seed " << r.seed << "\n";
      if (jobs <= 1) {
        run_one(r);
        continue;
      }
      const pid_t pid = fork();
      if (pid < 0) throw std::runtime_error("fork failed");
      if (pid == 0) {
        int code = 0;
        try {
          run_one(r);
        } catch (const std::exception& e) {
          std::cerr << "error: " << e.what() << "\n";
          code = 1;
        }
        std::_Exit(code);
      }
      ++running;
      continue;
    }
    int status = 0;
    if (wait(&status) > 0) {
      --running;
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) failed = true;
    }
  }
  if (failed) throw std::runtime_error("one or more sweep runs failed");

  std::ostringstream rows;
  rows << "agent,seed,converged,steps_to_convergence,mean_reward,mean_cost,cvar_cost,path_short,path_long,path_none\n";
  struct Summary {
    int runs = 0;
    int converged = 0;
    double steps = 0.0;
  };
  std::map<std::string, Summary> summary;
  for (const auto& r : runs) {
    const auto j = nlohmann::json::parse(oraclab::read_file(r.dir / "result.json"));
    const bool converged = j.at("long_path_converged").get<bool>();
    const auto steps = j.at("steps_to_convergence").get<std::int64_t>();
    const auto& h = j.at("path_histogram");
    rows << r.agent << ',' << r.seed << ',' << (converged ? 1 : 0) << ',' << steps << ','
         << j.at("mean_reward").get<double>() << ',' << j.at("mean_cost").get<double>() << ','
         << j.at("cvar_cost").get<double>() << ',' << h.at("short").get<int>() << ',' << h.at("long").get<int>()
         << ',' << h.at("none").get<int>() << "\n";
    auto& s = summary[r.agent];
    ++s.runs;
    if (converged) {
      ++s.converged;
      s.steps += static_cast<double>(steps);
    }
  }
  oraclab::write_file_atomic(sweep_dir / "aggregate.csv", rows.str());

  std::ostringstream sum;
  sum << "agent,runs,converged,convergence_rate,mean_steps_to_convergence\n";
  for (const auto& agent : agents) {
    const Summary& s = summary[agent];
    sum << agent << ',' << s.runs << ',' << s.converged << ',' << static_cast<double>(s.converged) / s.runs << ',';
    if (s.converged > 0) {
      sum << s.steps / s.converged;
    } else {
      sum << "nan";
    }
    sum << "\n";
  }
  oraclab::write_file_atomic(sweep_dir / "summary.csv", sum.str());
  std::cout << (sweep_dir / "aggregate.csv").string() << "\n" << sum.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oraclab: risk-averse constrained reinforcement learning"};
  app.require_subcommand(1);

  std::string out_dir_flag;
  std::string name;

  auto* train = app.add_subcommand("train", "Train one seed");
  ConfigFlags train_flags;
  train_flags.attach(*train, false);
  bool quiet = false;
  train->add_option("--out-dir", out_dir_flag, "output root (default $ORACLAB_OUT or ./runs)");
  train->add_option("--run-name", name, "run directory name");
  train->add_flag("--quiet", quiet, "no per-evaluation progress");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  ConfigFlags eval_flags;
  eval_flags.attach(*eval, false);
  std::string checkpoint;
  std::string output;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--output", output, "write the report here instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Train agents over several seeds and aggregate");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sweep, true);
  int seeds = 5;
  int jobs = 1;
  sweep->add_option("--seeds", seeds, "seeds per agent");
  sweep->add_option("--jobs", jobs, "parallel training processes");
  sweep->add_option("--out-dir", out_dir_flag, "output root (default $ORACLAB_OUT or ./runs)");
  sweep->add_option("--run-name", name, "sweep directory name");

  CLI11_PARSE(app, argc, argv);

  const fs::path out_dir = out_dir_flag.empty() ? default_out_dir() : fs::path(out_dir_flag);
  try {
    if (train->parsed()) return cmd_train(train_flags, out_dir, name, quiet);
    if (eval->parsed()) return cmd_eval(eval_flags, checkpoint, output);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, seeds, jobs, out_dir, name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
