#pragma once

#include <iosfwd>

#include "clasp/interface/config.hpp"

namespace clasp::interface {

// Exit codes: 0 success, 1 runtime error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Subcommands gen, train, index, search, eval, serve. The resolved config of
// every run is printed to `err` as one JSON line.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
             const EnvLookup& env = process_env);

}  // namespace clasp::interface
