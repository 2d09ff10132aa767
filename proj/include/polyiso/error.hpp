#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyiso {

enum class ErrorCode {
  TooFewVertices,
  DuplicateConsecutiveVertex,
  DegenerateZeroArea,
  BarycenterOutside,
  NonpositiveCentralAngle,
  ZeroRadius,
  InvalidManifoldPoint,
  NonpositiveArea,
  SamplingExhausted,
  RetractionFailed,
  DimensionMismatch,
  StepTooSmall,
  MismatchExceedsTolerance,
  NonpositiveSigma,
  NotOnManifold,
  DegenerateDirection,
  NotTangent,
  NotSimple,
  ReflectionCreatesSelfIntersection,
  FlipBudgetExhausted,
  ParseError,
  InternalInconsistency,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooFewVertices: return "TooFewVertices";
    case ErrorCode::DuplicateConsecutiveVertex: return "DuplicateConsecutiveVertex";
    case ErrorCode::DegenerateZeroArea: return "DegenerateZeroArea";
    case ErrorCode::BarycenterOutside: return "BarycenterOutside";
    case ErrorCode::NonpositiveCentralAngle: return "NonpositiveCentralAngle";
    case ErrorCode::ZeroRadius: return "ZeroRadius";
    case ErrorCode::InvalidManifoldPoint: return "InvalidManifoldPoint";
    case ErrorCode::NonpositiveArea: return "NonpositiveArea";
    case ErrorCode::SamplingExhausted: return "SamplingExhausted";
    case ErrorCode::RetractionFailed: return "RetractionFailed";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::StepTooSmall: return "StepTooSmall";
    case ErrorCode::MismatchExceedsTolerance: return "MismatchExceedsTolerance";
    case ErrorCode::NonpositiveSigma: return "NonpositiveSigma";
    case ErrorCode::NotOnManifold: return "NotOnManifold";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::NotTangent: return "NotTangent";
    case ErrorCode::NotSimple: return "NotSimple";
    case ErrorCode::ReflectionCreatesSelfIntersection: return "ReflectionCreatesSelfIntersection";
    case ErrorCode::FlipBudgetExhausted: return "FlipBudgetExhausted";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InternalInconsistency: return "InternalInconsistency";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code; every failure in the library
/// surfaces as one of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace polyiso
