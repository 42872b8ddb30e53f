#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bohm {

enum class ErrorKind {
  NodeProximity,
  CoordinateSingularity,
  UndefinedAzimuth,
  InvalidTolerance,
  TooFewSamples,
  ExcessiveNonConvergence,
  EnsembleDegenerate,
  DomainError,
  OverflowGuard,
  MissingEnsemble,
  ExcessiveAborts,
  ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NodeProximity: return "NodeProximity";
    case ErrorKind::CoordinateSingularity: return "CoordinateSingularity";
    case ErrorKind::UndefinedAzimuth: return "UndefinedAzimuth";
    case ErrorKind::InvalidTolerance: return "InvalidTolerance";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::ExcessiveNonConvergence: return "ExcessiveNonConvergence";
    case ErrorKind::EnsembleDegenerate: return "EnsembleDegenerate";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::OverflowGuard: return "OverflowGuard";
    case ErrorKind::MissingEnsemble: return "MissingEnsemble";
    case ErrorKind::ExcessiveAborts: return "ExcessiveAborts";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bohm
