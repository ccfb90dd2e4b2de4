#pragma once

#include <iosfwd>

namespace chbell {

// Entry point of the `chbell` command line tool. Returns the process exit
// status; diagnostics go to `err`, reports without --out go to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace chbell
