#pragma once

#include <string>

#include "rrl/config.hpp"

namespace rrl {

// Executes one CLI command against a validated configuration and writes its
// artifacts under io.output_dir.  Every artifact gets a sidecar
// <name>.meta.json carrying the config hash and seed (canonical CSV schemas
// are pinned byte-exact, so the stamp lives beside them rather than inside).
// Returns the process exit code: 0 success, 2 config error, 3 data error,
// 4 numeric failure.
int run_command(const std::string& command, const RunConfig& cfg);

}  // namespace rrl
