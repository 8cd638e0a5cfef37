#pragma once
#include <iosfwd>

namespace ibc::cli {

//! Entry point behind the ibc executable. Returns 0, 1 for config errors, 2 for numerical failures.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace ibc::cli
