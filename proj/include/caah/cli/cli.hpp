#pragma once

#include <iosfwd>

namespace caah::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumerical = 3 };

// Subcommands: synth, train, calibrate, evaluate, predict, ablate, gradcheck.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace caah::cli
