#pragma once

namespace wns::cli {

// Full command-line entry point. Returns the process exit status:
// 0 = all asserted tolerances pass, 1 = a tolerance failed,
// 2 = malformed config/arguments, 3 = internal error.
int run(int argc, const char* const* argv);

}  // namespace wns::cli
