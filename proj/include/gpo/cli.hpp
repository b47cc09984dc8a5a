#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gpo {

/// Entry point of the `gpo` tool. Returns the process exit code; diagnostics
/// go to `err` as a single line.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gpo
