#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace apd {

/// Runs the `apd` command line. args[0] is the program name. Returns 0 on
/// success, 1 on a usage error (message and usage on `err`), 2 on a runtime
/// error.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace apd
