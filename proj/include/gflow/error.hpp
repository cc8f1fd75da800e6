#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gflow {

enum class ErrorCode {
  NonPositiveHorizon,
  ZeroSteps,
  OutOfRange,
  NonPositiveParameter,
  DimensionMismatch,
  InvalidArgument,
  GradientUnavailable,
  HessianUnavailable,
  SingularJacobian,
  MaxIterations,
  NoSignChange,
  Diverging,
  DegenerateFit,
  DegenerateDirection,
  MissingRegularityMetadata,
  RangeViolation,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gflow
