#pragma once

#include <iosfwd>
#include <span>

namespace compound {

// Command-line entry point. args is the full argv (program name first).
// Returns the process exit code: 0 success, 1 uncategorized failure or a
// failed oracle check, 2 configuration error, 3 runtime cap exceeded,
// 4 capability bound exceeded.
int run_cli(std::span<const char* const> args, std::ostream& out, std::ostream& err);

}  // namespace compound
