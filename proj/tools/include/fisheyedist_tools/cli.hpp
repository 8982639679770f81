#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace fisheyedist::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Runs one `fisheyedist` invocation. `args` excludes the program name.
/// Reports go to `out`; failures print one line to `err` of the form
/// `error: <usage|data|numerical|internal>: <Code>: <message>`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace fisheyedist::cli
