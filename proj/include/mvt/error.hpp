#pragma once

#include <stdexcept>
#include <string>

namespace mvt {

// Every failure the library can report. The numeric values are part of the
// C ABI (see mvt.h) and must stay stable.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  IoError = 2,
  ParseError = 3,
  SchemaError = 4,
  NonPositiveDepth = 10,
  NoConvergence = 11,
  DegenerateConfiguration = 12,
  RankDeficient = 13,
  InsufficientViews = 14,
  DisconnectedRig = 15,
  DegenerateGeometry = 16,
  RoiOutOfBounds = 20,
  StreamTruncated = 21,
  EventCountMismatch = 22,
  SkewTooLarge = 23,
  InvertedRange = 24,
  OverlappingTrials = 25,
  SchemaMismatch = 30,
  EmptyInput = 31,
  TooShort = 32,
  NonUniform = 33,
  ContainsGaps = 34,
  ZeroVariance = 40,
  DegenerateZeroJerk = 41,
  ZeroPath = 42,
  DegenerateVariance = 43,
  DegenerateVertex = 44,
  TooFewPoints = 45,
  NonVideoInLeaf = 50,
  SuffixMismatch = 51,
  CameraSetInconsistent = 52,
  MissingPrerequisite = 53,
  NothingToReport = 54,
};

const char* error_code_name(ErrorCode code) noexcept;

// Process exit code for the CLI: 2 validation, 3 missing prerequisite,
// 4 numeric failure.
int exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mvt
