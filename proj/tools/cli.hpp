#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace resistnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitUsage = 64;

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command line (without the program name). Results go to `out`,
/// diagnostics and the run manifest (unless redirected) to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace resistnet::cli
