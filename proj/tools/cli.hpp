#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aoidrift::cli {

// Parses and executes one command line (without the program name) and writes
// results to `out` and diagnostics to `err`. Returns the process exit code:
// 0 on success, 1 when a verification run found a mismatch, 2 on usage or
// parameter errors. Exposed as a function so tests can drive the CLI
// in-process with string streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aoidrift::cli
