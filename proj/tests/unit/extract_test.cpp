#include <random>
#include <sstream>

#include "doctest.h"
#include "kgr/extract.hpp"
#include "kgr/toy_env.hpp"
#include "support.hpp"

using namespace kgr;
using kgr::test::code_of;

namespace {

Entity E(const char* text, EntityType t) { return make_entity(text, t); }

constexpr auto A = EntityType::kAnatomy;
constexpr auto D = EntityType::kDisorder;
constexpr auto C = EntityType::kConcept;
constexpr auto V = EntityType::kDevice;

Lexicon small_lexicon() {
  Lexicon lex;
  lex.add("pleural effusion", "pleural effusion", D);
  lex.add("effusion", "effusion", D);
  lex.add("right lung", "right lung", A);
  lex.add("increased", "increased", C);
  return lex;
}

}  // namespace

TEST_SUITE("extract") {

TEST_CASE("tokenize splits sentences and keeps decimals") {
  const auto t = tokenize("A 1.5 cm nodule. Lungs, clear!  Next?");
  REQUIRE(t.size() == 7);
  CHECK(t[1].text == "1.5");
  CHECK(t[3].text == "nodule");
  CHECK(t[3].sentence == 0);
  CHECK(t[4].text == "lungs");
  CHECK(t[4].sentence == 1);
  CHECK(t[6].sentence == 2);
  CHECK(tokenize("").empty());
}

TEST_CASE("longest match, left to right") {
  const auto got = extract_entities(
      "Increased pleural effusion in the right lung.", small_lexicon());
  CHECK(got == EntitySet{E("increased", C), E("pleural effusion", D),
                         E("right lung", A)});

  Lexicon lex;
  lex.add("lung", "lung", A);
  lex.add("lung base", "lung base", A);
  CHECK(extract_entities("the lung base", lex) == EntitySet{E("lung base", A)});
  CHECK(extract_entities("", lex).empty());
}

TEST_CASE("plural folding needs the singular in the lexicon") {
  Lexicon lex;
  lex.add("effusion", "effusion", D);
  lex.add("hila", "hilum", A);
  lex.add("mass", "mass", D);
  CHECK(extract_entities("bilateral effusions", lex) ==
        EntitySet{E("effusion", D)});
  CHECK(extract_entities("prominent hilas", lex) == EntitySet{E("hilum", A)});
  CHECK(extract_entities("the hila", lex) == EntitySet{E("hilum", A)});
  CHECK(extract_entities("a mass", lex) == EntitySet{E("mass", D)});
  CHECK(extract_entities("masss", lex) == EntitySet{E("mass", D)});
  CHECK(extract_entities("nodules", lex).empty());
}

TEST_CASE("builtin lexicon folds common plurals") {
  const auto got = extract_entities("Small effusions. Lungs clear.",
                                    Lexicon::builtin());
  CHECK(got.count(E("effusion", D)) == 1);
  CHECK(got.count(E("lung", A)) == 1);
  CHECK(got.count(E("small", EntityType::kSize)) == 1);
}

TEST_CASE("relation examples") {
  PatternSet p;
  p.add("in the", RelationType::kLocatedAt, Direction::kHeadFirst, D, A);
  Lexicon lex = small_lexicon();
  const Extractor ex(lex, p);
  CHECK(ex.extract("pleural effusion in the right lung").triplets ==
        TripletSet{make_triplet(E("pleural effusion", D),
                                RelationType::kLocatedAt, E("right lung", A))});

  const Extractor builtin;
  CHECK(builtin.extract("opacity suggestive of pneumonia").triplets ==
        TripletSet{make_triplet(E("opacity", D), RelationType::kSuggestiveOf,
                                E("pneumonia", D))});
  CHECK(builtin.extract("increased opacity").triplets ==
        TripletSet{make_triplet(E("increased", C), RelationType::kModify,
                                E("opacity", D))});
}

TEST_CASE("relations stay inside one sentence") {
  const Extractor ex;
  const auto got = ex.extract("Pleural effusion. In the right lung.");
  CHECK(got.triplets.empty());
  CHECK(got.entities.size() == 2);
}

TEST_CASE("trigger gap allows at most two filler tokens") {
  const Extractor ex;
  CHECK(ex.extract("Pleural effusion seen in the right lung.").triplets.size() ==
        1);
  CHECK(ex.extract("Pleural effusion is seen now in the right lung.")
            .triplets.empty());
  CHECK(ex.extract("Pleural effusion and the right lung.").triplets.empty());
}

TEST_CASE("tail-first pattern and type constraints") {
  const Extractor ex;
  CHECK(ex.extract("Right lung with pleural effusion.").triplets ==
        TripletSet{make_triplet(E("pleural effusion", D),
                                RelationType::kLocatedAt, E("right lung", A))});
  // Device -> Anatomy via a device trigger; Disorder head is not allowed.
  CHECK(ex.extract("Endotracheal tube terminates in the trachea.").triplets ==
        TripletSet{make_triplet(E("endotracheal tube", V),
                                RelationType::kLocatedAt, E("trachea", A))});
  CHECK(ex.extract("Opacity suggestive of right lung.").triplets.empty());
}

TEST_CASE("triplets never invent entities") {
  const Extractor ex;
  std::mt19937 gen(3);
  const std::vector<std::string> words = {
      "pleural effusion", "in the", "right lung", "increased", "opacity",
      "suggestive of", "pneumonia", "with", "left lung base", "at the",
      "tube", "located at", "chest", ".", "mild", "and", "consistent with"};
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const int n = 1 + static_cast<int>(gen() % 12);
    for (int k = 0; k < n; ++k) text += words[gen() % words.size()] + " ";
    const auto out = ex.extract(text);
    for (const auto& t : out.triplets) {
      CHECK(out.entities.count(t.head) == 1);
      CHECK(out.entities.count(t.tail) == 1);
      CHECK(t.head != t.tail);
    }
    CHECK(ex.extract(text).triplets == out.triplets);

    Lexicon extended = ex.lexicon();
    extended.add("zzyzx", "zzyzx", D);
    const Extractor ex2(extended, ex.patterns());
    const auto again = ex2.extract(text);
    CHECK(again.entities == out.entities);
    CHECK(again.triplets == out.triplets);
  }
}

TEST_CASE("toy templates round-trip through extraction") {
  const Extractor ex;
  const auto env = ToyEnvironment::bundled(ex);
  for (const auto& t : env.templates()) {
    const auto got = ex.extract(t.sentence);
    CHECK_MESSAGE(got.entities == t.annotation.entities, t.sentence);
    CHECK_MESSAGE(got.triplets == t.annotation.triplets, t.sentence);
  }
}

TEST_CASE("entity and triplet validation") {
  CHECK(code_of([] { make_entity("  ", A); }) == ErrorCode::kValidationError);
  CHECK(code_of([] {
          make_triplet(E("lung", A), RelationType::kModify, E("lung", A));
        }) == ErrorCode::kValidationError);
  CHECK(make_entity("  Right   Lung ", A).canonical == "right lung");
  CHECK(to_string(make_triplet(E("a", D), RelationType::kLocatedAt,
                               E("b", A))) == "a|LocatedAt|b");
}

TEST_CASE("lexicon and pattern files") {
  std::istringstream lex_in(
      R"({"surface":"PICC","canonical":"picc line","type":"Device"}
{"surface":"carina","type":"anatomy"}
)");
  const auto lex = Lexicon::read(lex_in);
  CHECK(lex.size() == 2);
  CHECK(extract_entities("picc tip near carina", lex) ==
        EntitySet{E("picc line", V), E("carina", A)});

  std::istringstream bad_type(R"({"surface":"x","type":"Finding"})");
  CHECK(code_of([&] { Lexicon::read(bad_type); }) ==
        ErrorCode::kUnknownEntityType);
  std::istringstream dup(
      R"({"surface":"x","type":"Anatomy"}
{"surface":"X","type":"Disorder"}
)");
  try {
    Lexicon::read(dup);
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidationError);
    CHECK(e.line() == 2);
  }

  std::istringstream pat(
      R"({"trigger":"near","relation":"located_at","direction":"head_first","tail_type":"Anatomy"})");
  const auto ps = PatternSet::read(pat);
  REQUIRE(ps.size() == 1);
  CHECK(ps.entries()[0].relation == RelationType::kLocatedAt);
  CHECK(ps.entries()[0].head_type == std::nullopt);
  std::istringstream bad_rel(R"({"trigger":"near","relation":"Causes"})");
  CHECK(code_of([&] { PatternSet::read(bad_rel); }) ==
        ErrorCode::kUnknownRelationType);
}

TEST_CASE("data files match the compiled-in assets") {
  CHECK(kgr::test::slurp(kgr::test::data_dir() / "lexicon.jsonl") ==
        builtin_lexicon_jsonl());
  CHECK(kgr::test::slurp(kgr::test::data_dir() / "patterns.jsonl") ==
        builtin_patterns_jsonl());
  CHECK(Lexicon::load(kgr::test::data_dir() / "lexicon.jsonl").size() ==
        Lexicon::builtin().size());
}

TEST_CASE("sidecar") {
  std::istringstream one(
      R"({"id":"r1","entities":[{"text":"carina","type":"Anatomy"}],"triplets":[]})");
  const auto s = read_sidecar(one);
  CHECK(s.at("r1").entities.size() == 1);
  CHECK(s.at("r1").triplets.empty());

  std::istringstream full(
      R"({"id":"r1","entities":[{"text":"effusion","type":"Disorder"},{"text":"Left Lung","type":"Anatomy"}],"triplets":[{"head":"effusion","relation":"LocatedAt","tail":"left lung"}]})");
  CHECK(read_sidecar(full).at("r1").triplets.size() == 1);

  std::istringstream finding(
      R"({"id":"r1","entities":[{"text":"x","type":"Finding"}],"triplets":[]})");
  CHECK(code_of([&] { read_sidecar(finding); }) ==
        ErrorCode::kUnknownEntityType);

  std::istringstream loop(
      R"({"id":"r1","entities":[{"text":"x","type":"Disorder"}],"triplets":[]}
{"id":"r2","entities":[{"text":"x","type":"Disorder"}],"triplets":[{"head":"x","relation":"Modify","tail":"x"}]}
)");
  try {
    read_sidecar(loop);
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidationError);
    CHECK(e.line() == 2);
  }

  std::istringstream unknown(
      R"({"id":"r1","entities":[{"text":"x","type":"Disorder"}],"triplets":[{"head":"x","relation":"Modify","tail":"y"}]})");
  CHECK(code_of([&] { read_sidecar(unknown); }) == ErrorCode::kValidationError);
}

}
