#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace aioli::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 1;
inline constexpr int kExitLearnerFailure = 2;
inline constexpr int kExitVerifyFailure = 3;

// Entry point shared by the binary and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aioli::cli
