#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gae::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kNumerical = 4,
  kIncompatible = 5,
};

/// Entry point of the `gae` tool; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gae::cli
