#pragma once

#include "oraclab/agent.hpp"
#include "oraclab/config.hpp"
#include "oraclab/param_io.hpp"

#include <filesystem>
#include <memory>

namespace oraclab {

/// Writes every network, optimiser moment and scalar of the agent, with the
/// run config as metadata. The file is written to a temp name and renamed.
void checkpoint_save(const std::filesystem::path& path, const agents::Agent& agent, const RunConfig& config);

struct Checkpoint {
  RunConfig config;
  nn::ParamArchive archive;
};

/// Throws std::runtime_error("checkpoint not found: ...") for a missing
/// file and nn::FormatVersionError for an unsupported format.
Checkpoint checkpoint_load(const std::filesystem::path& path);

/// Rebuilds the agent described by a checkpoint.
std::unique_ptr<agents::Agent> restore_agent(const Checkpoint& checkpoint);

}  // namespace oraclab
