#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bqcd {

/// Entry point behind the `bqcd` executable. Returns the process exit code:
/// 0 success, 2 config error, 3 simulation error, 4 I/O error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bqcd
