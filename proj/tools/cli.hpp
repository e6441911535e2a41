#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace npvine::cli {

/// Process exit codes.
enum ExitCode : int {
  ok = 0,
  reject = 1,
  parse_error = 2,
  degenerate_data = 3,
  schema_mismatch = 4,
  internal_error = 5,
};

/// Runs one invocation of the tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace npvine::cli
