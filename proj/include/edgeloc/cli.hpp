#pragma once

#include <iosfwd>

namespace edgeloc {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,          // bad arguments, unreadable inputs, invalid configuration
  kExitNotConverged = 2,   // localization ended in EarlyFailure, NoConsensus or MaxIterations
  kExitBelowFloor = 3,     // evaluation success rate under the requested floor
};

/// Subcommands: localize, render-edges, synth, eval.
int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace edgeloc
