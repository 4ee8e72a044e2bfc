#ifndef KGR_KGRAPH_HPP_
#define KGR_KGRAPH_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgr/extract.hpp"

namespace kgr {

// Immutable directed graph over entities. Node order is insertion order:
// triplet endpoints in input order, then extra entities.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  static KnowledgeGraph build(std::span<const Triplet> triplets,
                              std::span<const Entity> extra_entities = {});

  const std::vector<Entity>& nodes() const { return nodes_; }
  const std::vector<Triplet>& edges() const { return edges_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  std::optional<std::size_t> index_of(const Entity& e) const;
  bool has_edge(const Triplet& t) const { return edge_set_.count(t) != 0; }
  // Label-blind: any directed edge from -> to.
  bool linked(std::size_t from, std::size_t to) const {
    return links_.count({from, to}) != 0;
  }
  // In-degree plus out-degree over distinct label-blind links.
  std::size_t degree(std::size_t node) const;
  // Binary, label-blind adjacency in node order.
  std::vector<std::vector<std::uint8_t>> adjacency() const;

 private:
  std::size_t add_node(const Entity& e);

  std::vector<Entity> nodes_;
  std::map<Entity, std::size_t> index_;
  std::vector<Triplet> edges_;
  std::set<Triplet> edge_set_;
  std::set<std::pair<std::size_t, std::size_t>> links_;
};

// Set-based convenience; node order follows set order.
KnowledgeGraph build_graph(const TripletSet& triplets,
                           const EntitySet& extra_entities = {});
KnowledgeGraph build_graph(const Extraction& extraction);

// {"nodes":[{"text","type"}],"edges":[{"head","relation","tail"}]}
std::string graph_to_json(const KnowledgeGraph& graph);

// Token Jaccard of the canonical texts, 0 across types.
double node_similarity(const Entity& a, const Entity& b);

using NodeSimilarityFn = std::function<double(const Entity&, const Entity&)>;

// Cosine of per-entity vectors clamped to [0, 1]; 0 across types. Pairs
// with a missing vector fall back to node_similarity.
NodeSimilarityFn embedding_similarity(
    std::map<Entity, std::vector<double>> vectors);

inline constexpr double kDefaultAlignThreshold = 0.8;

struct NodeMatch {
  std::size_t generated = 0;
  double score = 0.0;
};

struct NodeAlignment {
  double threshold = kDefaultAlignThreshold;
  // Per reference node: best similarity over generated nodes (0 if none).
  std::vector<double> best_score;
  // Per reference node: the match when best_score >= threshold.
  std::vector<std::optional<NodeMatch>> mapping;

  std::size_t mapped_count() const;
  double mapped_score(std::size_t reference_node) const {
    return mapping[reference_node] ? mapping[reference_node]->score : 0.0;
  }
};

// Maps each reference node to its most similar generated node; earliest
// generated node wins ties. Many-to-one mappings are allowed.
NodeAlignment align(const KnowledgeGraph& reference,
                    const KnowledgeGraph& generated,
                    double threshold = kDefaultAlignThreshold,
                    const NodeSimilarityFn& similarity = node_similarity);

}  // namespace kgr

#endif  // KGR_KGRAPH_HPP_
