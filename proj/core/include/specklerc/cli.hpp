#pragma once

#include <string>
#include <vector>

namespace specklerc::cli {

/// Parses and executes one command. Returns the process exit code:
/// 0 success, 2 configuration/validation error, 3 numerical failure.
int run(int argc, const char* const* argv);

/// Same, from bare arguments (no program name).
int run(const std::vector<std::string>& args);

}  // namespace specklerc::cli
