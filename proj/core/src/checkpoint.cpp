#include "oraclab/checkpoint.hpp"

#include <stdexcept>
#include <system_error>

namespace oraclab {

void checkpoint_save(const std::filesystem::path& path, const agents::Agent& agent, const RunConfig& config) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  nn::save_archive(tmp, agent.to_archive(config.to_json()));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot write checkpoint '" + path.string() + "': " + ec.message());
  }
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw std::runtime_error("checkpoint not found: " + path.string());
  Checkpoint c;
  c.archive = nn::load_archive(path);
  try {
    c.config = RunConfig::from_json(c.archive.metadata);
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint '" + path.string() + "' has an unreadable config: " + e.what());
  }
  return c;
}

std::unique_ptr<agents::Agent> restore_agent(const Checkpoint& checkpoint) {
  const auto env = make_environment(checkpoint.config);
  auto agent = std::make_unique<agents::Agent>(checkpoint.config.agent_config(env->state_dim(), env->action_dim()),
                                               derive_seed(checkpoint.config.seed, streams::kInit));
  agent->load_archive(checkpoint.archive);
  return agent;
}

}  // namespace oraclab
