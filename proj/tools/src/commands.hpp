#pragma once

#include <iosfwd>

namespace smfpca::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

/// Parses arguments and runs one subcommand. Diagnostics go to `err`;
/// numerical failures are reported there as a JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smfpca::cli
