#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nafreach/agent.hpp"
#include "nafreach/sim.hpp"

namespace nafreach {

// Everything needed to resume or evaluate a training run.
struct CheckpointData {
    std::string env_kind;          // e.g. "circle2d-6"
    std::uint64_t geometry_hash = 0;
    AgentParams params;
    AgentOpt opt;
    std::uint64_t train_steps = 0;
};

// Stable fingerprint of the physical setup a checkpoint was trained on.
std::uint64_t geometry_hash(const EnvGeometry& geom);

// Binary, fixed little-endian regardless of host; written atomically
// (temp file + rename). save -> load -> save is byte-identical.
void save_checkpoint(const std::string& path, const CheckpointData& data);

// Throws CheckpointError with a distinct message for bad magic ("not a
// checkpoint"), unsupported version, truncation, shape-table mismatch, and
// geometry mismatch (when expect_geometry is given).
CheckpointData load_checkpoint(const std::string& path,
                               std::optional<std::uint64_t> expect_geometry = std::nullopt);

} // namespace nafreach
