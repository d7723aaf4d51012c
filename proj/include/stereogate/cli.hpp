#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stereogate::cli {

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "STEREOGATE_OUT";

// Entry point of the stereogate binary. Returns the process exit code:
// 0 success, 1 input or validation error, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stereogate::cli
