#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tdsim {

/// Name of the environment variable that overrides the seed of every
/// subcommand (an explicit --seed still wins).
inline constexpr const char* kSeedEnvVar = "DILATION_SEED";

/// Runs one command line (without the program name). Returns 0 on success,
/// 1 on a usage error and 2 when the command itself fails.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tdsim
