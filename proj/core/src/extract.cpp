#include "kgr/extract.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "io_util.hpp"
#include "kgr/error.hpp"
#include "kgr/text.hpp"

namespace kgr {

namespace {

constexpr std::array<std::string_view, kNumEntityTypes> kEntityTypeNames = {
    "Anatomy", "Disorder", "Concept", "Device", "Procedure", "Size"};
constexpr std::array<std::string_view, kNumRelationTypes> kRelationNames = {
    "LocatedAt", "SuggestiveOf", "Modify"};

std::string squash_name(std::string_view name) {
  std::string out;
  for (char c : text::to_lower(name)) {
    if (c != ' ' && c != '_' && c != '-') out.push_back(c);
  }
  return out;
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names,
                           std::string_view name) {
  const std::string wanted = squash_name(name);
  for (std::size_t i = 0; i < N; ++i) {
    if (squash_name(names[i]) == wanted) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

bool is_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

std::string span_key(std::span<const Token> span) {
  std::string key;
  for (std::size_t i = 0; i < span.size(); ++i) {
    if (i > 0) key.push_back(' ');
    key += span[i].text;
  }
  return key;
}

std::vector<std::string> token_texts(std::string_view phrase) {
  std::vector<std::string> out;
  for (auto& t : tokenize(phrase)) out.push_back(std::move(t.text));
  return out;
}

bool contains_run(std::span<const Token> gap,
                  const std::vector<std::string>& needle) {
  if (needle.empty() || gap.size() < needle.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= gap.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k) {
      match = gap[i + k].text == needle[k];
    }
    if (match) return true;
  }
  return false;
}

EntityType require_entity_type(const nlohmann::json& v, std::size_t line_no) {
  if (!v.is_string()) {
    throw Error(ErrorCode::kParseError, "entity type must be a string",
                line_no);
  }
  const auto type = parse_entity_type(v.get<std::string>());
  if (!type) {
    throw Error(ErrorCode::kUnknownEntityType,
                "\"" + v.get<std::string>() + "\"", line_no);
  }
  return *type;
}

RelationType require_relation_type(const nlohmann::json& v,
                                   std::size_t line_no) {
  if (!v.is_string()) {
    throw Error(ErrorCode::kParseError, "relation must be a string", line_no);
  }
  const auto rel = parse_relation_type(v.get<std::string>());
  if (!rel) {
    throw Error(ErrorCode::kUnknownRelationType,
                "\"" + v.get<std::string>() + "\"", line_no);
  }
  return *rel;
}

std::optional<EntityType> optional_entity_type(const nlohmann::json& obj,
                                               const char* field,
                                               std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return require_entity_type(*it, line_no);
}

// Rethrows library errors raised while handling one input line with that
// line attached.
template <typename Fn>
auto at_line(std::size_t line_no, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.line()) throw;
    throw Error(e.code(), e.detail(), line_no);
  }
}

}  // namespace

std::string_view to_string(EntityType type) {
  return kEntityTypeNames[static_cast<std::size_t>(type)];
}
std::string_view to_string(RelationType type) {
  return kRelationNames[static_cast<std::size_t>(type)];
}
std::optional<EntityType> parse_entity_type(std::string_view name) {
  return lookup<EntityType>(kEntityTypeNames, name);
}
std::optional<RelationType> parse_relation_type(std::string_view name) {
  return lookup<RelationType>(kRelationNames, name);
}

Entity make_entity(std::string_view text, EntityType type) {
  Entity e{text::collapse(text), type};
  if (e.canonical.empty()) {
    throw Error(ErrorCode::kValidationError, "empty entity text");
  }
  return e;
}

Triplet make_triplet(Entity head, RelationType relation, Entity tail) {
  if (head == tail) {
    throw Error(ErrorCode::kValidationError,
                "self-loop triplet on \"" + head.canonical + "\"");
  }
  return Triplet{std::move(head), relation, std::move(tail)};
}

std::string to_string(const Triplet& t) {
  return t.head.canonical + "|" + std::string(to_string(t.relation)) + "|" +
         t.tail.canonical;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t sentence = 0;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back({std::move(current), sentence});
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    const auto prev = i > 0 ? static_cast<unsigned char>(text[i - 1]) : ' ';
    const auto next =
        i + 1 < text.size() ? static_cast<unsigned char>(text[i + 1]) : ' ';
    if (is_alnum(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : static_cast<char>(c));
      continue;
    }
    if (c == '.' && is_digit(prev) && is_digit(next) && !current.empty()) {
      current.push_back('.');
      continue;
    }
    if ((c == '-' || c == '\'') && !current.empty() && is_alnum(next)) {
      current.push_back(static_cast<char>(c));
      continue;
    }
    flush();
    if (c == '.' || c == '!' || c == '?') {
      if (!tokens.empty() && tokens.back().sentence == sentence) ++sentence;
    }
  }
  flush();
  return tokens;
}

void Lexicon::add(std::string_view surface, std::string_view canonical,
                  EntityType type) {
  const auto tokens = tokenize(surface);
  if (tokens.empty()) {
    throw Error(ErrorCode::kValidationError, "empty lexicon surface");
  }
  if (tokens.front().sentence != tokens.back().sentence) {
    throw Error(ErrorCode::kValidationError,
                "lexicon surface spans a sentence break: \"" +
                    std::string(surface) + "\"");
  }
  const std::string key = span_key(tokens);
  Entity entity = make_entity(canonical.empty() ? key : canonical, type);
  if (by_key_.count(key) != 0) {
    throw Error(ErrorCode::kValidationError,
                "duplicate lexicon surface \"" + key + "\"");
  }
  by_key_.emplace(key, entries_.size());
  entries_.push_back({key, std::move(entity.canonical), type});
  max_tokens_ = std::max(max_tokens_, tokens.size());
}

const LexiconEntry* Lexicon::match(std::span<const Token> span) const {
  if (span.empty()) return nullptr;
  std::string key = span_key(span);
  if (auto it = by_key_.find(key); it != by_key_.end()) {
    return &entries_[it->second];
  }
  const std::string& last = span.back().text;
  if (last.size() > 1 && last.back() == 's') {
    key.pop_back();
    if (auto it = by_key_.find(key); it != by_key_.end()) {
      return &entries_[it->second];
    }
  }
  return nullptr;
}

Lexicon Lexicon::read(std::istream& in) {
  Lexicon lex;
  detail::for_each_json_line(in, [&](const nlohmann::json& obj,
                                     std::size_t line_no) {
    const auto surface = detail::require_string(obj, "surface", line_no);
    std::string canonical = surface;
    if (auto it = obj.find("canonical"); it != obj.end() && !it->is_null()) {
      canonical = detail::require_string(obj, "canonical", line_no);
    }
    const auto type =
        require_entity_type(detail::require_field(obj, "type", line_no),
                            line_no);
    at_line(line_no, [&] { lex.add(surface, canonical, type); });
  });
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read(in);
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = [] {
    std::istringstream in{std::string(builtin_lexicon_jsonl())};
    return read(in);
  }();
  return lex;
}

void PatternSet::add(std::string_view trigger, RelationType relation,
                     Direction direction, std::optional<EntityType> head_type,
                     std::optional<EntityType> tail_type) {
  auto tokens = token_texts(trigger);
  if (tokens.empty()) {
    throw Error(ErrorCode::kValidationError, "empty pattern trigger");
  }
  entries_.push_back({text::join(tokens, " "), std::move(tokens), relation,
                      direction, head_type, tail_type});
}

PatternSet PatternSet::read(std::istream& in) {
  PatternSet set;
  detail::for_each_json_line(in, [&](const nlohmann::json& obj,
                                     std::size_t line_no) {
    const auto trigger = detail::require_string(obj, "trigger", line_no);
    const auto relation =
        require_relation_type(detail::require_field(obj, "relation", line_no),
                              line_no);
    Direction direction = Direction::kHeadFirst;
    if (auto it = obj.find("direction"); it != obj.end() && !it->is_null()) {
      const auto d = detail::require_string(obj, "direction", line_no);
      if (d == "head_first") {
        direction = Direction::kHeadFirst;
      } else if (d == "tail_first") {
        direction = Direction::kTailFirst;
      } else {
        throw Error(ErrorCode::kParseError,
                    "direction must be head_first or tail_first", line_no);
      }
    }
    const auto head_type = optional_entity_type(obj, "head_type", line_no);
    const auto tail_type = optional_entity_type(obj, "tail_type", line_no);
    at_line(line_no, [&] {
      set.add(trigger, relation, direction, head_type, tail_type);
    });
  });
  return set;
}

PatternSet PatternSet::load(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read(in);
}

const PatternSet& PatternSet::builtin() {
  static const PatternSet set = [] {
    std::istringstream in{std::string(builtin_patterns_jsonl())};
    return read(in);
  }();
  return set;
}

std::vector<Mention> find_mentions(std::span<const Token> tokens,
                                   const Lexicon& lexicon) {
  std::vector<Mention> mentions;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(lexicon.max_tokens(), tokens.size() - i);
    bool matched = false;
    for (std::size_t len = longest; len >= 1; --len) {
      if (tokens[i + len - 1].sentence != tokens[i].sentence) continue;
      const LexiconEntry* entry = lexicon.match(tokens.subspan(i, len));
      if (entry == nullptr) continue;
      mentions.push_back({Entity{entry->canonical, entry->type},
                          tokens[i].sentence, i, i + len});
      i += len;
      matched = true;
      break;
    }
    if (!matched) ++i;
  }
  return mentions;
}

EntitySet extract_entities(std::string_view text, const Lexicon& lexicon) {
  const auto tokens = tokenize(text);
  EntitySet out;
  for (auto& m : find_mentions(tokens, lexicon)) out.insert(std::move(m.entity));
  return out;
}

TripletSet extract_relations(std::span<const Token> tokens,
                             std::span<const Mention> mentions,
                             const PatternSet& patterns) {
  TripletSet out;
  for (std::size_t k = 0; k + 1 < mentions.size(); ++k) {
    const Mention& first = mentions[k];
    const Mention& second = mentions[k + 1];
    if (first.sentence != second.sentence) continue;
    const auto gap = tokens.subspan(first.end, second.begin - first.end);

    if (gap.empty() && first.entity.type == EntityType::kConcept &&
        first.entity != second.entity) {
      out.insert({first.entity, RelationType::kModify, second.entity});
    }

    for (const auto& p : patterns.entries()) {
      if (gap.size() > p.trigger_tokens.size() + kMaxFillerTokens) continue;
      if (!contains_run(gap, p.trigger_tokens)) continue;
      const bool head_first = p.direction == Direction::kHeadFirst;
      const Entity& head = head_first ? first.entity : second.entity;
      const Entity& tail = head_first ? second.entity : first.entity;
      if (p.head_type && head.type != *p.head_type) continue;
      if (p.tail_type && tail.type != *p.tail_type) continue;
      if (head == tail) continue;
      out.insert({head, p.relation, tail});
    }
  }
  return out;
}

Extraction Extractor::extract(std::string_view text) const {
  const auto tokens = tokenize(text);
  const auto mentions = find_mentions(tokens, lexicon_);
  Extraction out;
  for (const auto& m : mentions) out.entities.insert(m.entity);
  out.triplets = extract_relations(tokens, mentions, patterns_);
  return out;
}

SidecarMap read_sidecar(std::istream& in) {
  SidecarMap out;
  detail::for_each_json_line(in, [&](const nlohmann::json& obj,
                                     std::size_t line_no) {
    const auto id = detail::require_string(obj, "id", line_no);
    const auto& entities = detail::require_field(obj, "entities", line_no);
    if (!entities.is_array()) {
      throw Error(ErrorCode::kParseError, "\"entities\" must be an array",
                  line_no);
    }
    Extraction ex;
    for (const auto& e : entities) {
      if (!e.is_object()) {
        throw Error(ErrorCode::kParseError, "entity must be an object",
                    line_no);
      }
      const auto text = detail::require_string(e, "text", line_no);
      const auto type =
          require_entity_type(detail::require_field(e, "type", line_no),
                              line_no);
      ex.entities.insert(at_line(line_no, [&] { return make_entity(text, type); }));
    }
    auto resolve = [&](const std::string& ref) -> const Entity& {
      const std::string canonical = text::collapse(ref);
      const Entity* found = nullptr;
      for (const auto& e : ex.entities) {
        if (e.canonical != canonical) continue;
        if (found != nullptr) {
          throw Error(ErrorCode::kValidationError,
                      "ambiguous entity reference \"" + ref + "\"", line_no);
        }
        found = &e;
      }
      if (found == nullptr) {
        throw Error(ErrorCode::kValidationError,
                    "triplet references unknown entity \"" + ref + "\"",
                    line_no);
      }
      return *found;
    };
    if (auto it = obj.find("triplets"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) {
        throw Error(ErrorCode::kParseError, "\"triplets\" must be an array",
                    line_no);
      }
      for (const auto& t : *it) {
        if (!t.is_object()) {
          throw Error(ErrorCode::kParseError, "triplet must be an object",
                      line_no);
        }
        const Entity& head = resolve(detail::require_string(t, "head", line_no));
        const auto relation = require_relation_type(
            detail::require_field(t, "relation", line_no), line_no);
        const Entity& tail = resolve(detail::require_string(t, "tail", line_no));
        ex.triplets.insert(
            at_line(line_no, [&] { return make_triplet(head, relation, tail); }));
      }
    }
    if (!out.emplace(id, std::move(ex)).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id \"" + id + "\"",
                  line_no);
    }
  });
  return out;
}

SidecarMap load_sidecar(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_sidecar(in);
}

}  // namespace kgr
