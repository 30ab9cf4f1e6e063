#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vds {

/// Runs one `vds` invocation. `args` excludes the program name. Returns the
/// process exit code: 0 on success, 1 on a module error (printed to `err` as
/// `Kind: message`), 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vds
