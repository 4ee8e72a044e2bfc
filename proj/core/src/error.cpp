#include "kgr/error.hpp"

namespace kgr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingThinkTag: return "MissingThinkTag";
    case ErrorCode::kMissingAnswerTag: return "MissingAnswerTag";
    case ErrorCode::kMalformedNesting: return "MalformedNesting";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kUnknownRecord: return "UnknownRecord";
    case ErrorCode::kUnknownEntityType: return "UnknownEntityType";
    case ErrorCode::kUnknownRelationType: return "UnknownRelationType";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kGroupTooSmall: return "GroupTooSmall";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kEmptyAnswer: return "EmptyAnswer";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kMissingCandidate: return "MissingCandidate";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& message,
                           std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(format_message(code, message, line)),
      code_(code),
      line_(line),
      detail_(message) {}

}  // namespace kgr
