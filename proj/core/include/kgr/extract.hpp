#ifndef KGR_EXTRACT_HPP_
#define KGR_EXTRACT_HPP_

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kgr {

enum class EntityType { kAnatomy, kDisorder, kConcept, kDevice, kProcedure, kSize };
inline constexpr int kNumEntityTypes = 6;

enum class RelationType { kLocatedAt, kSuggestiveOf, kModify };
inline constexpr int kNumRelationTypes = 3;

std::string_view to_string(EntityType type);
std::string_view to_string(RelationType type);
// Case, space, underscore and hyphen insensitive ("located_at" == "LocatedAt").
std::optional<EntityType> parse_entity_type(std::string_view name);
std::optional<RelationType> parse_relation_type(std::string_view name);

struct Entity {
  std::string canonical;
  EntityType type = EntityType::kAnatomy;

  auto operator<=>(const Entity&) const = default;
};

struct Triplet {
  Entity head;
  RelationType relation = RelationType::kLocatedAt;
  Entity tail;

  auto operator<=>(const Triplet&) const = default;
};

using EntitySet = std::set<Entity>;
using TripletSet = std::set<Triplet>;

// Canonicalizes `text` (lowercase, collapsed whitespace). Throws
// ValidationError when the result is empty.
Entity make_entity(std::string_view text, EntityType type);
// Throws ValidationError on a self-loop.
Triplet make_triplet(Entity head, RelationType relation, Entity tail);

// "head|Relation|tail", used in reports.
std::string to_string(const Triplet& t);

struct Token {
  std::string text;
  std::size_t sentence = 0;
};

// Lowercased word tokens with sentence indices. Sentences end at '.', '!'
// and '?'; a '.' between digits stays inside the token ("2.5").
std::vector<Token> tokenize(std::string_view text);

struct LexiconEntry {
  std::string surface;
  std::string canonical;
  EntityType type = EntityType::kAnatomy;
};

class Lexicon {
 public:
  // Throws ValidationError on an empty or duplicate surface phrase.
  void add(std::string_view surface, std::string_view canonical,
           EntityType type);

  // Entry whose surface equals `span`. If there is none and the last token
  // ends in "s", the singular surface is tried.
  const LexiconEntry* match(std::span<const Token> span) const;

  std::size_t max_tokens() const { return max_tokens_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<LexiconEntry>& entries() const { return entries_; }

  static Lexicon read(std::istream& in);
  static Lexicon load(const std::filesystem::path& path);
  // The shipped radiology vocabulary (data/lexicon.jsonl).
  static const Lexicon& builtin();

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_key_;
  std::size_t max_tokens_ = 0;
};

enum class Direction { kHeadFirst, kTailFirst };

struct RelationPattern {
  std::string trigger;
  std::vector<std::string> trigger_tokens;
  RelationType relation = RelationType::kLocatedAt;
  Direction direction = Direction::kHeadFirst;
  std::optional<EntityType> head_type;
  std::optional<EntityType> tail_type;
};

class PatternSet {
 public:
  void add(std::string_view trigger, RelationType relation,
           Direction direction, std::optional<EntityType> head_type,
           std::optional<EntityType> tail_type);

  const std::vector<RelationPattern>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  static PatternSet read(std::istream& in);
  static PatternSet load(const std::filesystem::path& path);
  static const PatternSet& builtin();

 private:
  std::vector<RelationPattern> entries_;
};

// Raw JSONL text of the shipped lexicon and pattern assets.
std::string_view builtin_lexicon_jsonl();
std::string_view builtin_patterns_jsonl();

struct Mention {
  Entity entity;
  std::size_t sentence = 0;
  std::size_t begin = 0;  // token index
  std::size_t end = 0;    // one past the last token
};

// Longest-match, left-to-right, non-overlapping lexicon scan.
std::vector<Mention> find_mentions(std::span<const Token> tokens,
                                   const Lexicon& lexicon);

EntitySet extract_entities(std::string_view text, const Lexicon& lexicon);

// Filler tokens allowed around a trigger between two mentions
// ("effusion is seen in the right lung").
inline constexpr std::size_t kMaxFillerTokens = 2;

// Relations between consecutive mentions of one sentence. A pattern fires
// when its trigger occurs in the gap between the mentions; a Concept mention
// directly followed by another mention yields Modify.
TripletSet extract_relations(std::span<const Token> tokens,
                             std::span<const Mention> mentions,
                             const PatternSet& patterns);

struct Extraction {
  EntitySet entities;
  TripletSet triplets;
};

class Extractor {
 public:
  Extractor() : Extractor(Lexicon::builtin(), PatternSet::builtin()) {}
  Extractor(Lexicon lexicon, PatternSet patterns)
      : lexicon_(std::move(lexicon)), patterns_(std::move(patterns)) {}

  Extraction extract(std::string_view text) const;

  const Lexicon& lexicon() const { return lexicon_; }
  const PatternSet& patterns() const { return patterns_; }

 private:
  Lexicon lexicon_;
  PatternSet patterns_;
};

// Externally produced extractions keyed by record id:
// {"id", "entities":[{"text","type"}], "triplets":[{"head","relation","tail"}]}
using SidecarMap = std::map<std::string, Extraction>;

SidecarMap read_sidecar(std::istream& in);
SidecarMap load_sidecar(const std::filesystem::path& path);

}  // namespace kgr

#endif  // KGR_EXTRACT_HPP_
