#pragma once

#include <string>
#include <vector>

namespace privlens::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNumerical = 4,
};

/// Entry point of the privlens tool; returns the process exit code.
int run(int argc, char** argv);

}  // namespace privlens::cli
