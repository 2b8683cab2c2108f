#pragma once

#include <string>
#include <vector>

namespace imbf::cli {

inline constexpr const char* kToolVersion = "imbf 0.1.0";

// Exit codes are a stable contract:
//   0 success, 1 partial comparison failure, 2 input/config error,
//   3 runtime training error.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace imbf::cli
