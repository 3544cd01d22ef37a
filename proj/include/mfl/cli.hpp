#pragma once

namespace mfl {

// Parses argv and dispatches the subcommand.  Exit status: 0 success,
// 1 configuration/usage error, 2 numerical failure (collision, divergence),
// 3 failed assertion in a check subcommand.
int run_cli(int argc, const char* const* argv);

} // namespace mfl
