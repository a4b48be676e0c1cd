#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace aqe {

// Command-line entry point, separated from main() so tests can drive it
// in-process. Results go to `out`, diagnostics to `err`. Returns the process
// exit code (0 = success / all verdicts pass).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aqe
