#include "doctest.h"
#include "json.hpp"
#include "kgr/kgraph.hpp"
#include "kgr/metrics.hpp"
#include "support.hpp"

using namespace kgr;

namespace {

constexpr auto A = EntityType::kAnatomy;
constexpr auto D = EntityType::kDisorder;

Entity E(const char* text, EntityType t = D) { return make_entity(text, t); }
Triplet T(const char* h, const char* t) {
  return make_triplet(E(h), RelationType::kLocatedAt, E(t));
}

}  // namespace

TEST_SUITE("kgraph") {

TEST_CASE("build_graph") {
  CHECK(build_graph(TripletSet{}).empty());
  const auto g = build_graph(TripletSet{T("a", "b")});
  CHECK(g.size() == 2);
  CHECK(g.edges().size() == 1);
  const auto h = build_graph(TripletSet{T("a", "b")}, EntitySet{E("c")});
  CHECK(h.size() == 3);
  CHECK(h.edges().size() == 1);
  CHECK(h.degree(*h.index_of(E("c"))) == 0);
  CHECK(h.degree(*h.index_of(E("a"))) == 1);
}

TEST_CASE("build_graph is idempotent under self-union") {
  const TripletSet ts{T("a", "b"), T("b", "c"), T("c", "a")};
  TripletSet doubled = ts;
  doubled.insert(ts.begin(), ts.end());
  const auto g1 = build_graph(ts);
  const auto g2 = build_graph(doubled);
  CHECK(g1.nodes() == g2.nodes());
  CHECK(g1.edges() == g2.edges());
  CHECK(g1.adjacency() == g2.adjacency());
}

TEST_CASE("adjacency ignores relation labels") {
  const auto g = build_graph(TripletSet{
      T("a", "b"), make_triplet(E("a"), RelationType::kModify, E("b"))});
  CHECK(g.edges().size() == 2);
  const auto m = g.adjacency();
  const auto a = *g.index_of(E("a"));
  const auto b = *g.index_of(E("b"));
  CHECK(m[a][b] == 1);
  CHECK(m[b][a] == 0);
  CHECK(g.degree(a) == 1);
}

TEST_CASE("node_similarity") {
  CHECK(node_similarity(E("pleural effusion"), E("pleural effusion")) == 1.0);
  CHECK(node_similarity(E("left lung", A), E("lung", A)) == 0.5);
  CHECK(node_similarity(E("lung", A), E("lung", D)) == 0.0);
}

TEST_CASE("align") {
  const auto g = build_graph(TripletSet{T("a", "b"), T("b", "c")});
  const auto id = align(g, g, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    REQUIRE(id.mapping[i]);
    CHECK(id.mapping[i]->generated == i);
    CHECK(id.mapping[i]->score == 1.0);
  }
  CHECK(align(g, KnowledgeGraph{}).mapped_count() == 0);

  const auto ref = build_graph(TripletSet{}, EntitySet{E("lung", A)});
  const auto gen = KnowledgeGraph::build(
      {}, std::vector<Entity>{E("left lung", A), E("lung base", A)});
  const auto al = align(ref, gen, 0.4);
  REQUIRE(al.mapping[0]);
  CHECK(al.mapping[0]->generated == 0);
  CHECK(al.mapping[0]->score == 0.5);
  CHECK(align(ref, gen).mapped_count() == 0);
  CHECK(align(ref, gen).best_score[0] == 0.5);
}

TEST_CASE("alignment scores are what kg_nsc averages") {
  const auto ref = build_graph(TripletSet{T("left lung", "right lung"),
                                          T("pleural effusion", "base")});
  const auto gen = build_graph(TripletSet{T("lung", "right lung")},
                               EntitySet{E("effusion"), E("base")});
  const auto al = align(ref, gen, 0.0);
  double mean = 0.0;
  for (double s : al.best_score) mean += s;
  mean /= static_cast<double>(al.best_score.size());
  CHECK(kg_nsc(ref, gen) == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("embedding similarity hook") {
  const auto sim = embedding_similarity(
      {{E("a"), {1.0, 0.0}}, {E("b"), {1.0, 1.0}}, {E("c"), {-1.0, 0.0}}});
  CHECK(sim(E("a"), E("b")) == doctest::Approx(std::sqrt(0.5)));
  CHECK(sim(E("a"), E("c")) == 0.0);
  CHECK(sim(E("a"), E("zz")) == node_similarity(E("a"), E("zz")));
}

TEST_CASE("graph_to_json") {
  const auto j = nlohmann::json::parse(
      graph_to_json(build_graph(TripletSet{T("a", "b")})));
  CHECK(j["nodes"].size() == 2);
  CHECK(j["nodes"][0]["text"] == "a");
  CHECK(j["nodes"][0]["type"] == "Disorder");
  CHECK(j["edges"][0]["relation"] == "LocatedAt");
  CHECK(j["edges"][0]["tail"] == "b");
}

}
