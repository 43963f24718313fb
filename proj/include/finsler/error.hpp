#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace finsler {

enum class ErrorCode {
  ZeroVector,
  BadConfig,
  DivisionByZero,
  ShapeMismatch,
  DomainError,
  OrderExceeded,
  LexError,
  ParseError,
  ArityError,
  UnboundVariable,
  SpecError,
  OutOfChart,
  SingularMetric,
  CrossCheckFailure,
  DegenerateFlag,
  UndefinedFit,
  RiemannianPoint,
  DimensionError,
  NotConstantCurvature,
  ChartExit,
  StepFailure,
  VanishingVector,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Lexing and parsing failures. `position` is a byte offset into the source.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorCode code, const std::string& message, std::size_t position,
              std::vector<std::string> expected = {})
      : Error(code, message + " at offset " + std::to_string(position)),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

/// Raised when an integrated curve leaves the metric's chart.
class ChartExitError : public Error {
 public:
  ChartExitError(double time, const std::string& message)
      : Error(ErrorCode::ChartExit, message + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace finsler
