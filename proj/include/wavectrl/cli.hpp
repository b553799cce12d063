#pragma once

namespace wavectrl {

// Full command-line entry point.  Exit codes: 0 success, 2 configuration or
// usage error, 3 solver non-convergence, 4 I/O failure.
int cli_main(int argc, char** argv);

} // namespace wavectrl
