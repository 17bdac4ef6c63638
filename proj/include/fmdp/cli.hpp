#pragma once

#include <iosfwd>

namespace fmdp {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes of run_cli.
enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,  // bad config, scenario, policy file or command line
    kExitContract = 2,    // contract / capacity / bounds errors, layout mismatch
    kExitCheckFailed = 3  // a requested check (e.g. --require-exact) did not hold
};

/// Entry point behind the uavmdp binary. Verbs: validate, solve, decompose,
/// recombine, verify, simulate, bench, compare. Every verb writes its files
/// under the output directory together with manifest.json.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fmdp
