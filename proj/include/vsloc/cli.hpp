#pragma once

#include <iosfwd>

namespace vsloc {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    // bad arguments, config or scene
  kExitRuntime = 2,  // I/O, format or numerical failure
  kExitPartial = 3,  // finished, but some scenes failed
};

// Entry point of the `vsloc` tool: simulate | dataset | train | eval | reproduce.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vsloc
