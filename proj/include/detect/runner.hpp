#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "detect/scenario.hpp"

namespace detect {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class Command { Simulate, Kinetic, Invert, Check };

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitNotConverged = 4;

struct RunOptions {
    Command command = Command::Check;
    std::string scenario_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::size_t> ensemble_override;
};

// Executes one CLI command end to end: parse, run, export, manifest.
// Returns the process exit code; failures are also written as error JSON
// (stderr and <out>/error.json when possible).
int run_command(const RunOptions& options);

// Worker-thread cap: DETECT_THREADS when set, hardware concurrency otherwise.
std::size_t worker_count(std::size_t runs);

}  // namespace detect
