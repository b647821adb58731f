#pragma once

#include <stdexcept>
#include <string>

namespace solgeo {

enum class ErrorCode {
  NonDerivation,
  NonPositiveEigenvalue,
  JacobiViolation,
  UnsupportedStep,
  IllConditioned,
  NotASubalgebra,
  EmptyPath,
  NotDiagonalizable,
  InsufficientPerpendicularLength,
  ConflictingSurgeries,
  SelectionImpossible,
  NoValidConstants,
  NoQualifyingSlice,
  CertificationFailure,
  NontrivialSymmetry,
  InvalidSymmetry,
  BadInput,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonDerivation: return "NonDerivation";
    case ErrorCode::NonPositiveEigenvalue: return "NonPositiveEigenvalue";
    case ErrorCode::JacobiViolation: return "JacobiViolation";
    case ErrorCode::UnsupportedStep: return "UnsupportedStep";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NotASubalgebra: return "NotASubalgebra";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::NotDiagonalizable: return "NotDiagonalizable";
    case ErrorCode::InsufficientPerpendicularLength: return "InsufficientPerpendicularLength";
    case ErrorCode::ConflictingSurgeries: return "ConflictingSurgeries";
    case ErrorCode::SelectionImpossible: return "SelectionImpossible";
    case ErrorCode::NoValidConstants: return "NoValidConstants";
    case ErrorCode::NoQualifyingSlice: return "NoQualifyingSlice";
    case ErrorCode::CertificationFailure: return "CertificationFailure";
    case ErrorCode::NontrivialSymmetry: return "NontrivialSymmetry";
    case ErrorCode::InvalidSymmetry: return "InvalidSymmetry";
    case ErrorCode::BadInput: return "BadInput";
  }
  return "Unknown";
}

/// Library error carrying a stable failure class plus a human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace solgeo
