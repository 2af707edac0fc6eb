#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loopkit {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Runs `loopkit <subcommand> ...`. `args` excludes the program name.
/// Errors go to `err`, as a JSON object when --json is given.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loopkit
