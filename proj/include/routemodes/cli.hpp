#pragma once

// Command-line driver: `routemodes <ingest|analyze|report|validate|synth|collect>`.

#include <ostream>
#include <string>
#include <vector>

namespace routemodes::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command. `args` excludes the program name. Returns the process
/// exit code: 0 success, 2 usage or input error, 1 internal error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace routemodes::cli
