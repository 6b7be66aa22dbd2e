#include "mvt/error.hpp"

namespace mvt {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InsufficientViews: return "InsufficientViews";
    case ErrorCode::DisconnectedRig: return "DisconnectedRig";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::RoiOutOfBounds: return "RoiOutOfBounds";
    case ErrorCode::StreamTruncated: return "StreamTruncated";
    case ErrorCode::EventCountMismatch: return "EventCountMismatch";
    case ErrorCode::SkewTooLarge: return "SkewTooLarge";
    case ErrorCode::InvertedRange: return "InvertedRange";
    case ErrorCode::OverlappingTrials: return "OverlappingTrials";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NonUniform: return "NonUniform";
    case ErrorCode::ContainsGaps: return "ContainsGaps";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DegenerateZeroJerk: return "DegenerateZeroJerk";
    case ErrorCode::ZeroPath: return "ZeroPath";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::DegenerateVertex: return "DegenerateVertex";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonVideoInLeaf: return "NonVideoInLeaf";
    case ErrorCode::SuffixMismatch: return "SuffixMismatch";
    case ErrorCode::CameraSetInconsistent: return "CameraSetInconsistent";
    case ErrorCode::MissingPrerequisite: return "MissingPrerequisite";
    case ErrorCode::NothingToReport: return "NothingToReport";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok:
      return 0;
    case ErrorCode::MissingPrerequisite:
      return 3;
    case ErrorCode::NonPositiveDepth:
    case ErrorCode::NoConvergence:
    case ErrorCode::DegenerateConfiguration:
    case ErrorCode::RankDeficient:
    case ErrorCode::InsufficientViews:
    case ErrorCode::DisconnectedRig:
    case ErrorCode::DegenerateGeometry:
    case ErrorCode::ZeroVariance:
    case ErrorCode::DegenerateZeroJerk:
    case ErrorCode::ZeroPath:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::DegenerateVertex:
    case ErrorCode::TooFewPoints:
      return 4;
    default:
      return 2;
  }
}

}  // namespace mvt
