#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace casimir {

enum class ErrorKind {
  SingularMatrix,
  SingularBlock,
  NotUnitary,
  NotContraction,
  ChannelMismatch,
  ResonantSingular,
  BranchJump,
  BranchRisk,
  DomainError,
  NotConverged,
  OscillatoryFailure,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind tag lets
/// callers (the CLI in particular) map failures to exit codes without RTTI
/// gymnastics.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::NotUnitary: return "NotUnitary";
    case ErrorKind::NotContraction: return "NotContraction";
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::ResonantSingular: return "ResonantSingular";
    case ErrorKind::BranchJump: return "BranchJump";
    case ErrorKind::BranchRisk: return "BranchRisk";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::OscillatoryFailure: return "OscillatoryFailure";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace casimir
