#pragma once

#include <string>

#include "bsc/runconfig.hpp"

namespace bsc {

// Exit codes: 0 success, 1 numerical failure, 2 configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

int cmd_simulate(const RunConfig& cfg);
int cmd_expand(const RunConfig& cfg);
int cmd_forms(const RunConfig& cfg);
int cmd_moments(const RunConfig& cfg);
int cmd_synthesize(const RunConfig& cfg);
int cmd_mintime(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

/// Dispatch by subcommand name; unknown names return kExitConfig.
int run_command(const std::string& name, const RunConfig& cfg);

} // namespace bsc
