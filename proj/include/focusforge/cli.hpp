#pragma once

#include <iosfwd>

namespace focusforge::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kCompileError = 3,
  kSimulationError = 4,
};

/// Entry point of the `focusforge` tool. Subcommands: design, calibrate,
/// simulate, analyze, export-lut. Progress goes to `out`, errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace focusforge::cli
