#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace freb::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 2;
inline constexpr int kDataError = 3;
inline constexpr int kNumericalError = 4;

// Runs `freb <command> ...`. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace freb::cli
