#include "kgr/corpus.hpp"

#include <array>
#include <unordered_set>
#include <utility>

#include "io_util.hpp"
#include "kgr/text.hpp"

namespace kgr {

namespace {

constexpr std::array<std::string_view, 3> kTaskNames = {"Basic", "Region",
                                                        "Compare"};
constexpr std::array<std::string_view, kNumQuestionTypes> kQuestionTypeNames =
    {"Presence", "Anatomy", "Attribute", "Abnormality", "Size",
     "Plane",    "Gender",  "Severity",  "Type",        "Difference"};
constexpr std::array<std::string_view, 2> kAnswerTypeNames = {"Open",
                                                              "Closed"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names,
                           std::string_view name) {
  const std::string wanted = text::to_lower(text::trim(name));
  for (std::size_t i = 0; i < N; ++i) {
    if (text::to_lower(names[i]) == wanted) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::string tag_span(std::string_view raw, std::string_view open,
                     std::string_view close, ErrorCode missing) {
  const auto open_pos = raw.find(open);
  const auto close_pos = raw.find(close);
  if (open_pos == std::string_view::npos) {
    throw Error(missing, "no " + std::string(open) + " tag");
  }
  if (close_pos == std::string_view::npos) {
    throw Error(ErrorCode::kMalformedNesting,
                "unterminated " + std::string(open) + " block");
  }
  if (close_pos < open_pos) {
    throw Error(ErrorCode::kMalformedNesting,
                std::string(close) + " precedes " + std::string(open));
  }
  const auto begin = open_pos + open.size();
  return std::string(text::trim(raw.substr(begin, close_pos - begin)));
}

// Lowercase, collapse whitespace, drop trailing '.', ',' and ';'.
std::string normalize_scalar(std::string_view s) {
  std::string out = text::collapse(s);
  for (;;) {
    const std::size_t before = out.size();
    while (!out.empty() &&
           (out.back() == '.' || out.back() == ',' || out.back() == ';')) {
      out.pop_back();
    }
    out = std::string(text::trim(out));
    if (out.size() == before) return out;
  }
}

std::vector<double> read_vector(const nlohmann::json& v, const char* name,
                                std::size_t line_no) {
  if (!v.is_array()) {
    throw Error(ErrorCode::kParseError,
                std::string("field \"") + name + "\" must be an array",
                line_no);
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw Error(ErrorCode::kParseError,
                  std::string("field \"") + name + "\" must hold numbers",
                  line_no);
    }
    out.push_back(x.get<double>());
  }
  return out;
}

constexpr std::pair<Modality, const char*> kEmbeddingFields[] = {
    {Modality::kQuestion, "emb_q"},
    {Modality::kThink, "emb_t"},
    {Modality::kVision, "emb_v"}};

void read_embedding_fields(const nlohmann::json& obj, std::size_t line_no,
                           std::map<Modality, std::vector<double>>& out) {
  for (const auto& [modality, field] : kEmbeddingFields) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) continue;
    out[modality] = read_vector(*it, field, line_no);
  }
}

}  // namespace

std::string_view to_string(Task task) {
  return kTaskNames[static_cast<std::size_t>(task)];
}
std::string_view to_string(QuestionType type) {
  return kQuestionTypeNames[static_cast<std::size_t>(type)];
}
std::string_view to_string(AnswerType type) {
  return kAnswerTypeNames[static_cast<std::size_t>(type)];
}
std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::kQuestion: return "Q";
    case Modality::kThink: return "T";
    case Modality::kVision: return "V";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view name) {
  return lookup<Task>(kTaskNames, name);
}
std::optional<QuestionType> parse_question_type(std::string_view name) {
  return lookup<QuestionType>(kQuestionTypeNames, name);
}
std::optional<AnswerType> parse_answer_type(std::string_view name) {
  return lookup<AnswerType>(kAnswerTypeNames, name);
}

ParsedResponse parse_response(std::string_view raw) {
  ParsedResponse out;
  out.think =
      tag_span(raw, kThinkOpen, kThinkClose, ErrorCode::kMissingThinkTag);
  out.answer =
      tag_span(raw, kAnswerOpen, kAnswerClose, ErrorCode::kMissingAnswerTag);
  return out;
}

std::string render_response(std::string_view think, std::string_view answer) {
  std::string out;
  out.reserve(think.size() + answer.size() + 32);
  out.append(kThinkOpen).append(think).append(kThinkClose);
  out.append(kAnswerOpen).append(answer).append(kAnswerClose);
  return out;
}

CandidateResponse make_candidate(std::string record_id, std::string raw) {
  CandidateResponse c;
  c.record_id = std::move(record_id);
  c.raw = std::move(raw);
  try {
    auto parsed = parse_response(c.raw);
    c.think = std::move(parsed.think);
    c.answer = std::move(parsed.answer);
  } catch (const Error& e) {
    c.format_error = e.code();
  }
  return c;
}

NormalizedAnswer normalize_answer(std::string_view answer) {
  std::string scalar = normalize_scalar(answer);
  if (scalar.find(',') == std::string::npos) return scalar;
  std::set<std::string> items;
  for (const auto& part : text::split(scalar, ',')) {
    std::string item = normalize_scalar(part);
    if (!item.empty()) items.insert(std::move(item));
  }
  if (items.empty()) return std::string();
  if (items.size() == 1) return *items.begin();
  return items;
}

std::string render_answer(const NormalizedAnswer& answer) {
  if (const auto* s = std::get_if<std::string>(&answer)) return *s;
  const auto& items = std::get<std::set<std::string>>(answer);
  return text::join(std::vector<std::string>(items.begin(), items.end()),
                    ", ");
}

std::vector<QARecord> read_corpus(std::istream& in) {
  std::vector<QARecord> records;
  std::unordered_set<std::string> seen;
  detail::for_each_json_line(in, [&](const nlohmann::json& obj,
                                     std::size_t line_no) {
    QARecord r;
    r.id = detail::require_string(obj, "id", line_no);
    if (r.id.empty()) {
      throw Error(ErrorCode::kParseError, "empty \"id\"", line_no);
    }
    const auto task = parse_task(detail::require_string(obj, "task", line_no));
    if (!task) throw Error(ErrorCode::kParseError, "unknown task", line_no);
    const auto qtype = parse_question_type(
        detail::require_string(obj, "question_type", line_no));
    if (!qtype) {
      throw Error(ErrorCode::kParseError, "unknown question_type", line_no);
    }
    const auto atype =
        parse_answer_type(detail::require_string(obj, "answer_type", line_no));
    if (!atype) {
      throw Error(ErrorCode::kParseError, "unknown answer_type", line_no);
    }
    r.task = *task;
    r.question_type = *qtype;
    r.answer_type = *atype;
    r.question = detail::require_string(obj, "question", line_no);
    r.reference_think = detail::require_string(obj, "reference_think", line_no);
    r.reference_answer =
        detail::require_string(obj, "reference_answer", line_no);
    read_embedding_fields(obj, line_no, r.embeddings);
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id \"" + r.id + "\"",
                  line_no);
    }
    records.push_back(std::move(r));
  });
  check_embedding_dimensions(records);
  return records;
}

std::vector<QARecord> load_corpus(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_corpus(in);
}

std::vector<CandidateResponse> read_candidates(std::istream& in) {
  std::vector<CandidateResponse> out;
  detail::for_each_json_line(in, [&](const nlohmann::json& obj,
                                     std::size_t line_no) {
    auto c = make_candidate(detail::require_string(obj, "record_id", line_no),
                            detail::require_string(obj, "raw", line_no));
    if (auto it = obj.find("answer_token_logprobs");
        it != obj.end() && !it->is_null()) {
      auto lps = read_vector(*it, "answer_token_logprobs", line_no);
      for (double lp : lps) {
        if (!(lp <= 0.0)) {
          throw Error(ErrorCode::kParseError,
                      "answer_token_logprobs entries must be <= 0", line_no);
        }
      }
      c.answer_token_logprobs = std::move(lps);
    }
    if (auto it = obj.find("sequence_logprob");
        it != obj.end() && !it->is_null()) {
      if (!it->is_number()) {
        throw Error(ErrorCode::kParseError,
                    "field \"sequence_logprob\" must be a number", line_no);
      }
      c.sequence_logprob = it->get<double>();
    }
    out.push_back(std::move(c));
  });
  return out;
}

std::vector<CandidateResponse> load_candidates(
    const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_candidates(in);
}

void read_embeddings(std::istream& in, std::vector<QARecord>& corpus) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < corpus.size(); ++i) index[corpus[i].id] = i;
  detail::for_each_json_line(in, [&](const nlohmann::json& obj,
                                     std::size_t line_no) {
    const auto id = detail::require_string(obj, "id", line_no);
    auto it = index.find(id);
    if (it == index.end()) {
      throw Error(ErrorCode::kUnknownRecord,
                  "embedding for unknown id \"" + id + "\"", line_no);
    }
    read_embedding_fields(obj, line_no, corpus[it->second].embeddings);
  });
  check_embedding_dimensions(corpus);
}

void load_embeddings(const std::filesystem::path& path,
                     std::vector<QARecord>& corpus) {
  auto in = detail::open_input(path);
  read_embeddings(in, corpus);
}

void check_embedding_dimensions(const std::vector<QARecord>& corpus) {
  std::map<Modality, std::size_t> dims;
  for (const auto& r : corpus) {
    for (const auto& [modality, vec] : r.embeddings) {
      auto [it, inserted] = dims.emplace(modality, vec.size());
      if (!inserted && it->second != vec.size()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "record \"" + r.id + "\" modality " +
                        std::string(to_string(modality)) + " has dimension " +
                        std::to_string(vec.size()) + ", expected " +
                        std::to_string(it->second));
      }
    }
  }
}

}  // namespace kgr
