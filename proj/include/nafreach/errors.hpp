#pragma once

#include <stdexcept>
#include <string>

namespace nafreach {

// Bad user-supplied configuration (unknown key, out-of-range value, missing file).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: a precondition the caller is responsible for was violated.
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Non-finite loss/gradients or other unrecoverable optimization failure.
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate geometry or non-finite physics state.
struct SimulationFault : std::runtime_error {
    explicit SimulationFault(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable, corrupt, or incompatible checkpoint file.
struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension mismatch between a checkpoint and a requested target/environment.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transport failure or malformed traffic on the environment protocol.
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace nafreach
