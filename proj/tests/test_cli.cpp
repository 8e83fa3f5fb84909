#include "oraclab/config.hpp"
#include "oraclab/metrics.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run(const std::string& args, const fs::path& out_root) {
  const std::string cmd =
      "ORACLAB_OUT='" + out_root.string() + "' '" + std::string(ORACLAB_CLI_PATH) + "' " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return o;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) o.output += buf.data();
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oraclab_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool has_partial(const fs::path& root) {
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().extension() == ".partial" || e.path().extension() == ".tmp") return true;
  }
  return false;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

const std::string kSmall =
    " --total-steps 400 --learning-starts 100 --batch-size 16 --eval-every 200 --eval-episodes 3"
    " --policy-hidden 8 --critic-hidden 8,8 --quantiles 8 --embedding-dim 8 --buffer-size 1000";

}  // namespace

TEST(Cli, TrainWritesCompleteRunDirectory) {
  const fs::path root = scratch("train");
  const Outcome o = run("train --env guardedmaze --agent orac --seed 1 --total-steps 1000 --eval-every 500 --quiet", root);
  ASSERT_EQ(o.code, 0) << o.output;
  const fs::path dir = root / "guardedmaze_orac_seed1";
  EXPECT_NE(o.output.find(dir.string()), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_TRUE(fs::exists(dir / "result.json"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "step_1000"));
  EXPECT_EQ(line_count(oraclab::read_file(dir / "metrics.csv")), 3u);
  EXPECT_FALSE(has_partial(root));

  const Outcome eval = run("eval --checkpoint '" + (dir / "checkpoints" / "step_1000").string() + "' --eval-episodes 4", root);
  ASSERT_EQ(eval.code, 0) << eval.output;
  EXPECT_NE(eval.output.find("\"episodes\": 4"), std::string::npos) << eval.output;

  const Outcome again = run("train --env guardedmaze --agent orac --seed 1 --total-steps 1000 --quiet", root);
  EXPECT_NE(again.code, 0);
  EXPECT_NE(again.output.find("error:"), std::string::npos);
  fs::remove_all(root);
}

TEST(Cli, EvalMissingCheckpointFails) {
  const fs::path root = scratch("eval_missing");
  const Outcome o = run("eval --checkpoint '" + (root / "missing").string() + "'", root);
  EXPECT_NE(o.code, 0);
  EXPECT_NE(o.output.find("checkpoint not found"), std::string::npos) << o.output;
  fs::remove_all(root);
}

TEST(Cli, UsageErrorsExitNonzero) {
  const fs::path root = scratch("usage");
  EXPECT_NE(run("train --no-such-flag 3", root).code, 0);
  EXPECT_NE(run("", root).code, 0);
  EXPECT_NE(run("eval", root).code, 0);
  const Outcome bad = run("train --quiet --rho 0" + kSmall, root);
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.output.find("error:"), std::string::npos);
  EXPECT_NE(run("train --quiet --agent nope" + kSmall, root).code, 0);
  EXPECT_FALSE(has_partial(root));
  fs::remove_all(root);
}

TEST(Cli, SweepAggregatesEveryRun) {
  const fs::path root = scratch("sweep");
  const Outcome o = run("sweep --agent wcsac,orac --seeds 2 --jobs 2 --guard-prob 0.15" + kSmall, root);
  ASSERT_EQ(o.code, 0) << o.output;
  const std::string agg = oraclab::read_file(root / "sweep_guardedmaze" / "aggregate.csv");
  EXPECT_EQ(line_count(agg), 5u);
  for (const char* row : {"wcsac,0,", "wcsac,1,", "orac,0,", "orac,1,"}) {
    EXPECT_NE(agg.find(std::string("\n") + row), std::string::npos) << row;
  }
  const std::string summary = oraclab::read_file(root / "sweep_guardedmaze" / "summary.csv");
  EXPECT_EQ(line_count(summary), 3u);
  EXPECT_FALSE(has_partial(root));

  // Parallel and serial sweeps train identical runs.
  const Outcome serial = run("sweep --agent wcsac,orac --seeds 2 --jobs 1 --run-name serial --guard-prob 0.15" + kSmall, root);
  ASSERT_EQ(serial.code, 0) << serial.output;
  EXPECT_EQ(oraclab::read_file(root / "serial" / "aggregate.csv"), agg);
  fs::remove_all(root);
}

TEST(Cli, ConfigEchoReproducesTheRun) {
  const fs::path root = scratch("echo");
  ASSERT_EQ(run("train --quiet --agent wcsac --seed 4 --run-name first" + kSmall, root).code, 0);
  const fs::path echo = root / "first" / "config.json";
  const Outcome second = run("train --config '" + echo.string() + "' --run-name second --quiet", root);
  ASSERT_EQ(second.code, 0) << second.output;
  EXPECT_EQ(oraclab::read_file(root / "first" / "metrics.csv"), oraclab::read_file(root / "second" / "metrics.csv"));
  EXPECT_EQ(oraclab::read_file(root / "first" / "config.json"), oraclab::read_file(root / "second" / "config.json"));
  fs::remove_all(root);
}

TEST(Cli, FlagsOverrideFileOverrideDefaults) {
  const fs::path root = scratch("precedence");
  {
    std::ofstream f(root / "cfg.json");
    f << R"({"seed": 9, "rho": 0.25, "total-steps": 400})";
  }
  const Outcome o = run("train --config '" + (root / "cfg.json").string() +
                            "' --rho 0.5 --run-name p --learning-starts 100 --batch-size 16 --eval-every 200"
                            " --eval-episodes 2 --policy-hidden 8 --critic-hidden 8 --quantiles 8 --quiet",
                        root);
  ASSERT_EQ(o.code, 0) << o.output;
  const auto cfg = oraclab::RunConfig::from_json(oraclab::read_file(root / "p" / "config.json"));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_DOUBLE_EQ(cfg.rho, 0.5);
  EXPECT_EQ(cfg.total_steps, 400);
  EXPECT_DOUBLE_EQ(cfg.cost_limit, oraclab::RunConfig{}.cost_limit);

  {
    std::ofstream f(root / "bad.json");
    f << R"({"sede": 9})";
  }
  EXPECT_NE(run("train --config '" + (root / "bad.json").string() + "' --quiet" + kSmall, root).code, 0);
  fs::remove_all(root);
}
