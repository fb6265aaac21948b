#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace segfusion::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kComputeError = 1,  ///< shape/domain errors: bad weights, mismatched rasters
  kIoError = 2,       ///< unreadable or malformed files, bad command line
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "SEGFUSION_OUTPUT_DIR";

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace segfusion::cli
