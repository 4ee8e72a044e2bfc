#ifndef KGR_CORPUS_HPP_
#define KGR_CORPUS_HPP_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgr/error.hpp"

namespace kgr {

enum class Task { kBasic, kRegion, kCompare };

enum class QuestionType {
  kPresence,
  kAnatomy,
  kAttribute,
  kAbnormality,
  kSize,
  kPlane,
  kGender,
  kSeverity,
  kType,
  kDifference,
};
inline constexpr int kNumQuestionTypes = 10;

enum class AnswerType { kOpen, kClosed };

enum class Modality { kQuestion, kThink, kVision };
inline constexpr Modality kAllModalities[] = {
    Modality::kQuestion, Modality::kThink, Modality::kVision};

std::string_view to_string(Task task);
std::string_view to_string(QuestionType type);
std::string_view to_string(AnswerType type);
std::string_view to_string(Modality modality);
// Case-insensitive name lookup.
std::optional<Task> parse_task(std::string_view name);
std::optional<QuestionType> parse_question_type(std::string_view name);
std::optional<AnswerType> parse_answer_type(std::string_view name);

struct QARecord {
  std::string id;
  Task task = Task::kBasic;
  QuestionType question_type = QuestionType::kPresence;
  AnswerType answer_type = AnswerType::kClosed;
  std::string question;
  std::string reference_think;
  std::string reference_answer;
  std::map<Modality, std::vector<double>> embeddings;
};

struct ParsedResponse {
  std::string think;
  std::string answer;
};

// Content of the first <think> and first <answer> block, trimmed. Throws
// MissingThinkTag, MissingAnswerTag, or MalformedNesting.
ParsedResponse parse_response(std::string_view raw);
std::string render_response(std::string_view think, std::string_view answer);

struct CandidateResponse {
  std::string record_id;
  std::string raw;
  std::string think;
  std::string answer;
  // Set when `raw` failed parse_response; think/answer are then empty.
  std::optional<ErrorCode> format_error;
  std::optional<std::vector<double>> answer_token_logprobs;
  std::optional<double> sequence_logprob;
};

CandidateResponse make_candidate(std::string record_id, std::string raw);

// Scalar string, or a set of items when the answer is a comma list.
using NormalizedAnswer = std::variant<std::string, std::set<std::string>>;

NormalizedAnswer normalize_answer(std::string_view answer);
// Inverse rendering: scalars as-is, sets joined with ", ".
std::string render_answer(const NormalizedAnswer& answer);

std::vector<QARecord> read_corpus(std::istream& in);
std::vector<QARecord> load_corpus(const std::filesystem::path& path);
std::vector<CandidateResponse> read_candidates(std::istream& in);
std::vector<CandidateResponse> load_candidates(const std::filesystem::path& path);

// Attaches `{"id","emb_q","emb_t","emb_v"}` lines to matching records.
void read_embeddings(std::istream& in, std::vector<QARecord>& corpus);
void load_embeddings(const std::filesystem::path& path,
                     std::vector<QARecord>& corpus);

// Every modality present in the corpus has one dimension. Throws
// DimensionMismatch.
void check_embedding_dimensions(const std::vector<QARecord>& corpus);

}  // namespace kgr

#endif  // KGR_CORPUS_HPP_
