#pragma once

#include <iosfwd>

namespace hvcm {

// Entry point of the `hvcm` tool: simulate | fit | ppc | stats | overlap.
// Returns the process exit status; diagnostics go to `err`.
int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hvcm
