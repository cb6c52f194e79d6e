#include "mvkit/error.hpp"

namespace mvkit {

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::GridEmpty:
    case ErrorCode::UnknownComponent:
      return ErrorCategory::Config;
    case ErrorCode::NumericalFailure:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::GridEmpty: return "GridEmpty";
    case ErrorCode::UnknownComponent: return "UnknownComponent";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::UnitMismatch: return "UnitMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::DegenerateView: return "DegenerateView";
    case ErrorCode::InvalidPolygon: return "InvalidPolygon";
    case ErrorCode::DuplicateSites: return "DuplicateSites";
    case ErrorCode::SiteOutsideBoundary: return "SiteOutsideBoundary";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::TooMuchBackground: return "TooMuchBackground";
    case ErrorCode::EmptyPatchSet: return "EmptyPatchSet";
    case ErrorCode::NotStandardized: return "NotStandardized";
    case ErrorCode::InsufficientComponents: return "InsufficientComponents";
    case ErrorCode::SpecInfeasible: return "SpecInfeasible";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mvkit
