#pragma once

#include <stdexcept>
#include <string>

namespace senstrack {

enum class ErrorCode {
  // model / configuration
  NonStochastic,
  NegativeEntry,
  DimensionMismatch,
  BudgetZero,
  CostOutOfRange,
  NotTwoStateScalar,
  NotTwoState,
  HypothesisViolated,
  GridTooLarge,
  MissingAccumulator,
  StageOutOfRange,
  ParseError,
  ValidationError,
  InvalidArgument,
  // numerics
  SingularCovariance,
  SingularInnovation,
  ZeroEvidence,
  DegenerateKernel,
  QuadratureUnstable,
  SingularAverageCovariance,
  SingularMixtureCovariance,
  DegenerateTestPoint,
  DegenerateRecursion,
  AllTestPointsDegenerate,
  NonpositiveInformation,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonStochastic: return "NonStochastic";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BudgetZero: return "BudgetZero";
    case ErrorCode::CostOutOfRange: return "CostOutOfRange";
    case ErrorCode::NotTwoStateScalar: return "NotTwoStateScalar";
    case ErrorCode::NotTwoState: return "NotTwoState";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::MissingAccumulator: return "MissingAccumulator";
    case ErrorCode::StageOutOfRange: return "StageOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::ZeroEvidence: return "ZeroEvidence";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
    case ErrorCode::QuadratureUnstable: return "QuadratureUnstable";
    case ErrorCode::SingularAverageCovariance: return "SingularAverageCovariance";
    case ErrorCode::SingularMixtureCovariance: return "SingularMixtureCovariance";
    case ErrorCode::DegenerateTestPoint: return "DegenerateTestPoint";
    case ErrorCode::DegenerateRecursion: return "DegenerateRecursion";
    case ErrorCode::AllTestPointsDegenerate: return "AllTestPointsDegenerate";
    case ErrorCode::NonpositiveInformation: return "NonpositiveInformation";
  }
  return "Unknown";
}

/// True for failures of the numerical machinery, false for bad inputs.
/// The CLI maps the two groups onto exit codes 2 and 1.
inline bool is_numeric(ErrorCode code) {
  return code >= ErrorCode::SingularCovariance;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace senstrack
