#include "kgr/kgraph.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "kgr/text.hpp"

namespace kgr {

std::size_t KnowledgeGraph::add_node(const Entity& e) {
  auto [it, inserted] = index_.emplace(e, nodes_.size());
  if (inserted) nodes_.push_back(e);
  return it->second;
}

KnowledgeGraph KnowledgeGraph::build(std::span<const Triplet> triplets,
                                     std::span<const Entity> extra_entities) {
  KnowledgeGraph g;
  for (const auto& t : triplets) {
    const auto h = g.add_node(t.head);
    const auto tl = g.add_node(t.tail);
    if (g.edge_set_.insert(t).second) g.edges_.push_back(t);
    g.links_.insert({h, tl});
  }
  for (const auto& e : extra_entities) g.add_node(e);
  return g;
}

std::optional<std::size_t> KnowledgeGraph::index_of(const Entity& e) const {
  auto it = index_.find(e);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t KnowledgeGraph::degree(std::size_t node) const {
  std::size_t d = 0;
  for (const auto& [from, to] : links_) {
    if (from == node) ++d;
    if (to == node) ++d;
  }
  return d;
}

std::vector<std::vector<std::uint8_t>> KnowledgeGraph::adjacency() const {
  std::vector<std::vector<std::uint8_t>> m(
      nodes_.size(), std::vector<std::uint8_t>(nodes_.size(), 0));
  for (const auto& [from, to] : links_) m[from][to] = 1;
  return m;
}

KnowledgeGraph build_graph(const TripletSet& triplets,
                           const EntitySet& extra_entities) {
  const std::vector<Triplet> t(triplets.begin(), triplets.end());
  const std::vector<Entity> e(extra_entities.begin(), extra_entities.end());
  return KnowledgeGraph::build(t, e);
}

KnowledgeGraph build_graph(const Extraction& extraction) {
  return build_graph(extraction.triplets, extraction.entities);
}

std::string graph_to_json(const KnowledgeGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : graph.nodes()) {
    nodes.push_back({{"text", n.canonical}, {"type", to_string(n.type)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& t : graph.edges()) {
    edges.push_back({{"head", t.head.canonical},
                     {"relation", to_string(t.relation)},
                     {"tail", t.tail.canonical}});
  }
  return nlohmann::json{{"nodes", nodes}, {"edges", edges}}.dump();
}

double node_similarity(const Entity& a, const Entity& b) {
  if (a.type != b.type) return 0.0;
  if (a.canonical == b.canonical) return 1.0;
  const auto ta = text::split_whitespace(a.canonical);
  const auto tb = text::split_whitespace(b.canonical);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  const std::size_t all = sa.size() + sb.size() - common;
  return all == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(all);
}

NodeSimilarityFn embedding_similarity(
    std::map<Entity, std::vector<double>> vectors) {
  return [vectors = std::move(vectors)](const Entity& a, const Entity& b) {
    if (a.type != b.type) return 0.0;
    if (a == b) return 1.0;
    const auto ia = vectors.find(a);
    const auto ib = vectors.find(b);
    if (ia == vectors.end() || ib == vectors.end() ||
        ia->second.size() != ib->second.size()) {
      return node_similarity(a, b);
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < ia->second.size(); ++i) {
      dot += ia->second[i] * ib->second[i];
      na += ia->second[i] * ia->second[i];
      nb += ib->second[i] * ib->second[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
  };
}

std::size_t NodeAlignment::mapped_count() const {
  return static_cast<std::size_t>(
      std::count_if(mapping.begin(), mapping.end(),
                    [](const auto& m) { return m.has_value(); }));
}

NodeAlignment align(const KnowledgeGraph& reference,
                    const KnowledgeGraph& generated, double threshold,
                    const NodeSimilarityFn& similarity) {
  NodeAlignment out;
  out.threshold = threshold;
  out.best_score.assign(reference.size(), 0.0);
  out.mapping.assign(reference.size(), std::nullopt);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    std::optional<NodeMatch> best;
    for (std::size_t j = 0; j < generated.size(); ++j) {
      const double s = similarity(reference.nodes()[i], generated.nodes()[j]);
      if (!best || s > best->score) best = NodeMatch{j, s};
    }
    if (!best) continue;
    out.best_score[i] = best->score;
    if (best->score >= threshold) out.mapping[i] = best;
  }
  return out;
}

}  // namespace kgr
