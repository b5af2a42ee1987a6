#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dsmfuse::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kIoError = 2,
  kGeometryMismatch = 3,
  kBadConfig = 4,
};

// Runs one invocation; args[0] is the program name. Subcommands:
// fuse, rank, eval, curve, rpc, synth.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsmfuse::cli
