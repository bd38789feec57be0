#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ml2 {

enum class ErrorKind {
  InvalidArgument,
  NonIncreasingKnots,
  LengthMismatch,
  InvalidDomain,
  RadiusTooLarge,
  SampleOnZero,
  EmptyCurve,
  NonFiniteIntegrand,
  DivergentNorm,
  DeltaTooLarge,
  TangencyViolated,
  TargetMismatch,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; the kind carries the contract-level
// error name so callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonIncreasingKnots: return "NonIncreasingKnots";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidDomain: return "InvalidDomain";
    case ErrorKind::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorKind::SampleOnZero: return "SampleOnZero";
    case ErrorKind::EmptyCurve: return "EmptyCurve";
    case ErrorKind::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorKind::DivergentNorm: return "DivergentNorm";
    case ErrorKind::DeltaTooLarge: return "DeltaTooLarge";
    case ErrorKind::TangencyViolated: return "TangencyViolated";
    case ErrorKind::TargetMismatch: return "TargetMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace ml2
