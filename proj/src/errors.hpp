// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_ERRORS_HPP
#define NRWE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nrwe {

enum class ErrorCode {
  DimensionMismatch,
  SingularDesign,
  DegenerateTreatment,
  DegenerateCell,
  DegenerateDensity,
  InvalidScale,
  SparseCell,
  TooFewObservations,
  UnsupportedDimension,
  FingerprintMismatch,
  ParseError,
  UnknownIdentifier,
  DomainError,
  NonGaussianTreatmentNoise,
  SupportViolation,
  ProjectionFailure,
  InvalidArgument,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::DegenerateTreatment: return "DegenerateTreatment";
    case ErrorCode::DegenerateCell: return "DegenerateCell";
    case ErrorCode::DegenerateDensity: return "DegenerateDensity";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::SparseCell: return "SparseCell";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NonGaussianTreatmentNoise: return "NonGaussianTreatmentNoise";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::ProjectionFailure: return "ProjectionFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(error_code_name(code)) + ": " + message);
}

}  // namespace nrwe

#endif  // NRWE_ERRORS_HPP
