#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ldplab {

enum class ErrorKind {
  NotPrimitive,
  EmptyRowOrColumn,
  InvalidMatrix,
  InadmissibleWord,
  InadmissibleConcatenation,
  BracketUndefined,
  IncompleteTable,
  InvalidPotential,
  MemoryTooLarge,
  NoConvergence,
  InadmissiblePast,
  InconsistentStart,
  WordTooShort,
  EnumerationTooLarge,
  BudgetExceeded,
  EmptyInterval,
  IncompatibleSupport,
  DegenerateFit,
  InvalidArgument,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures are reported through this type; kind() is stable and
// is what the CLI prints in its error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  // Wraps an underlying failure, e.g. ValidationError caused by NotPrimitive.
  Error(ErrorKind kind, ErrorKind cause, const std::string& message)
      : std::runtime_error(message), kind_(kind), cause_(cause) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<ErrorKind> cause() const noexcept { return cause_; }

 private:
  ErrorKind kind_;
  std::optional<ErrorKind> cause_;
};

}  // namespace ldplab
