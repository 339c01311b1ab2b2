#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wsiflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `wsiflow` command. `args` excludes the program name.
/// Subcommands: pipeline, simulate, bench, profile.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wsiflow
