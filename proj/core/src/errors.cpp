#include "fisheyedist/errors.hpp"

namespace fisheyedist {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::NoPreimage: return "NoPreimage";
    case ErrorCode::InvalidHeight: return "InvalidHeight";
    case ErrorCode::SingularFit: return "SingularFit";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DivergedTraining: return "DivergedTraining";
    case ErrorCode::OvershootsCenter: return "OvershootsCenter";
    case ErrorCode::UndefinedDirection: return "UndefinedDirection";
    case ErrorCode::GridOutsideFov: return "GridOutsideFov";
    case ErrorCode::PersonOutsideFov: return "PersonOutsideFov";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorClass error_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return ErrorClass::Usage;
    case ErrorCode::DegenerateProjection:
    case ErrorCode::NoPreimage:
    case ErrorCode::SingularFit:
    case ErrorCode::NoConvergence:
    case ErrorCode::DivergedTraining:
      return ErrorClass::Numerical;
    default:
      return ErrorClass::Data;
  }
}

}  // namespace fisheyedist
