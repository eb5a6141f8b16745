#pragma once

#include <ostream>

namespace nvread::cli {

/// Runs the `nvreadout` command line. Returns the process exit code:
/// 0 success, 2 validation or usage error, 3 runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nvread::cli
