#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fisheyedist {

enum class ErrorCode {
  InvalidArgument,
  DegenerateProjection,
  NoPreimage,
  InvalidHeight,
  SingularFit,
  NoConvergence,
  DivergedTraining,
  OvershootsCenter,
  UndefinedDirection,
  GridOutsideFov,
  PersonOutsideFov,
  EmptyCategory,
  ParseError,
  ValidationError,
  IoError,
};

/// Broad failure class, used by the CLI to pick an exit status.
enum class ErrorClass { Usage, Data, Numerical };

std::string_view to_string(ErrorCode code);
ErrorClass error_class(ErrorCode code);

/// Every library failure is reported through this exception. `code()` is
/// stable and machine readable; `what()` carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fisheyedist
