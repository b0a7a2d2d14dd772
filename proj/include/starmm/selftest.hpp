#pragma once

#include <iosfwd>

namespace starmm {

/// Compact oracle battery behind the CLI `selftest` subcommand: model
/// identities, surrogate tightness/minorant spot checks, projection and
/// normalization behavior. Prints one line per check; returns true when all
/// pass.
bool selftest_run(std::ostream& out);

}  // namespace starmm
