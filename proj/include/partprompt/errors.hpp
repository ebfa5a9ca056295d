#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace partprompt {

enum class ErrorKind {
  ZeroVector,
  EmptySelection,
  DimMismatch,
  OutOfBounds,
  InvalidArgument,
  SolverFailure,
  DegenerateData,
  FormatError,
  IoError,
  ProtocolError,
  Timeout,
  SidecarFailure,
  AllCandidatesEmpty,
  SpecInfeasible,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

// Every domain failure in the library is reported through this type; `kind()`
// lets callers (and the CLI exit-code mapping) branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace partprompt
