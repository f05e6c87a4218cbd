#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gatedclip::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses `args` (args[0] is the program name) and runs one subcommand:
/// gen-synthetic, train, eval, predict, analyze-gates, inspect.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gatedclip::cli
