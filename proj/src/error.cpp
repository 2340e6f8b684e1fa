#include "argos/error.hpp"

namespace argos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::BadIdPattern: return "BadIdPattern";
    case ErrorCode::InconsistentDimension: return "InconsistentDimension";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::LlmExtractionUnparseable: return "LlmExtractionUnparseable";
    case ErrorCode::UnknownRule: return "UnknownRule";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::EmptyResponse: return "EmptyResponse";
    case ErrorCode::WrongLineCount: return "WrongLineCount";
    case ErrorCode::MissingMechanismPrefix: return "MissingMechanismPrefix";
    case ErrorCode::FsrParseError: return "FsrParseError";
    case ErrorCode::TooFewVectors: return "TooFewVectors";
    case ErrorCode::DegenerateSet: return "DegenerateSet";
    case ErrorCode::JudgeParseError: return "JudgeParseError";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::MissingMetric: return "MissingMetric";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingStage: return "MissingStage";
    case ErrorCode::LockHeld: return "LockHeld";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& detail, int status) {
  std::string msg(to_string(code));
  if (status != 0) msg += " [status " + std::to_string(status) + "]";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, std::string detail, int status)
    : std::runtime_error(compose(code, detail, status)),
      code_(code),
      detail_(std::move(detail)),
      status_(status) {}

}  // namespace argos
