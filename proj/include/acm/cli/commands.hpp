#pragma once

#include <iosfwd>

namespace acm::cli {

/// Entry point of the `acm` tool. Returns the process exit code; errors are
/// reported on `err` as a single "error: ..." line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace acm::cli
