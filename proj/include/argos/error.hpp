#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace argos {

enum class ErrorCode {
  // corpus
  IoError,
  EmptyCorpus,
  DuplicateId,
  MalformedRecord,
  BadIdPattern,
  InconsistentDimension,
  // embedding / vector ops
  EmptyText,
  ProviderError,
  DimensionMismatch,
  ZeroNorm,
  EmptyList,
  // grounding
  LlmExtractionUnparseable,
  // hazard generation
  UnknownRule,
  BackendError,
  EmptyResponse,
  WrongLineCount,
  MissingMechanismPrefix,
  // fsr synthesis
  FsrParseError,
  // evaluation
  TooFewVectors,
  DegenerateSet,
  JudgeParseError,
  ScoreOutOfRange,
  MissingMetric,
  // pipeline
  InvalidArgument,
  ConfigError,
  MissingStage,
  LockHeld,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `detail()` carries the offending
/// id, line, metric name or raw text; `status()` is the HTTP status for
/// ProviderError/BackendError (0 for transport failures).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail, int status = 0);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  int status() const noexcept { return status_; }

 private:
  ErrorCode code_;
  std::string detail_;
  int status_;
};

}  // namespace argos
