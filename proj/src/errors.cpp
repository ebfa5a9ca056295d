#include "partprompt/errors.hpp"

namespace partprompt {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ProtocolError: return "ProtocolError";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::SidecarFailure: return "SidecarFailure";
    case ErrorKind::AllCandidatesEmpty: return "AllCandidatesEmpty";
    case ErrorKind::SpecInfeasible: return "SpecInfeasible";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace partprompt
