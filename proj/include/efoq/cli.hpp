#pragma once

namespace efoq {

// Dispatches one subcommand invocation. Returns the process exit code:
// 0 success, 1 runtime or resource failure, 2 usage and input-file problems,
// 3 breached internal invariants.
int run_cli(int argc, const char* const* argv);

}  // namespace efoq
