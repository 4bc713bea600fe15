#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seot {

enum class ErrorKind {
  InvalidInput,
  ShapeError,
  NumericalError,
  OracleTooLarge,
  UnsupportedByOracle,
  UnsupportedCost,
  InvalidState,
  DegenerateGraph,
  IterativeSolverError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// what() without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::OracleTooLarge: return "OracleTooLarge";
    case ErrorKind::UnsupportedByOracle: return "UnsupportedByOracle";
    case ErrorKind::UnsupportedCost: return "UnsupportedCost";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::DegenerateGraph: return "DegenerateGraph";
    case ErrorKind::IterativeSolverError: return "IterativeSolverError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace seot
