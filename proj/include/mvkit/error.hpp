#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvkit {

// Every failure the library raises carries one of these codes. The CLI maps
// the category of a code onto its process exit status.
enum class ErrorCode {
  // configuration / caller errors
  InvalidArgument,
  ConfigInvalid,
  GridEmpty,
  UnknownComponent,
  // data errors
  InvalidData,
  ConstantColumn,
  UnitMismatch,
  LengthMismatch,
  ShapeMismatch,
  RankTooLarge,
  DegenerateView,
  InvalidPolygon,
  DuplicateSites,
  SiteOutsideBoundary,
  EmptyOverlap,
  TooMuchBackground,
  EmptyPatchSet,
  NotStandardized,
  InsufficientComponents,
  SpecInfeasible,
  NotOrthonormal,
  Io,
  // numerical failures
  NumericalFailure,
};

enum class ErrorCategory { Config, Data, Numerical };

ErrorCategory category_of(ErrorCode code);
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace mvkit
