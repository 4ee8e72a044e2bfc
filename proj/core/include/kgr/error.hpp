#ifndef KGR_ERROR_HPP_
#define KGR_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgr {

enum class ErrorCode {
  kMissingThinkTag,
  kMissingAnswerTag,
  kMalformedNesting,
  kParseError,
  kDuplicateId,
  kUnknownRecord,
  kUnknownEntityType,
  kUnknownRelationType,
  kValidationError,
  kGroupTooSmall,
  kLengthMismatch,
  kUnknownToken,
  kNonFiniteGradient,
  kEmptyAnswer,
  kMissingEmbedding,
  kDimensionMismatch,
  kKTooLarge,
  kMissingCandidate,
  kConfigError,
  kIoError,
};

// Stable machine-readable name, e.g. "MissingThinkTag".
std::string_view to_string(ErrorCode code);

// Every failure raised by the library. `line` is set for errors tied to a
// line of an input file (1-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const { return code_; }
  std::optional<std::size_t> line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
  std::string detail_;
};

}  // namespace kgr

#endif  // KGR_ERROR_HPP_
