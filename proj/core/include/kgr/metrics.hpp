#ifndef KGR_METRICS_HPP_
#define KGR_METRICS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgr/corpus.hpp"
#include "kgr/extract.hpp"
#include "kgr/kgraph.hpp"
#include "kgr/reward.hpp"

namespace kgr {

struct GraphMetrics {
  double nsc = 0.0;
  double ams = 0.0;
  double scs = 0.0;
};

// Mean over reference nodes of the best similarity to any generated node.
// 1 for an empty reference, 0 for an empty generated graph.
double kg_nsc(const KnowledgeGraph& reference, const KnowledgeGraph& generated,
              const NodeSimilarityFn& similarity = node_similarity);

// Pearson correlation of two rows. Constant rows score 1 when identical to
// the other row and 0 otherwise.
double row_correlation(std::span<const double> a, std::span<const double> b);

// Weighted mean of row correlations between the reference adjacency and the
// generated adjacency pulled back through the alignment. Row weight is
// max(1, reference degree). Unmapped nodes give zero rows and columns.
double kg_ams(const KnowledgeGraph& reference, const KnowledgeGraph& generated,
              const NodeAlignment& alignment);

using ImportanceTable = std::map<Triplet, double>;

inline constexpr std::size_t kDefaultScsK = 10;

// Subgraphs are single reference triplets; the K most important (ties in
// triplet order) are scored by P = (edge present + mean node score) / 2 and
// averaged with importance weights. Missing importances count as 1.
// K defaults to min(10, |reference edges|).
double kg_scs(const KnowledgeGraph& reference, const KnowledgeGraph& generated,
              const NodeAlignment& alignment, const ImportanceTable& importance,
              std::optional<std::size_t> k = std::nullopt);

// Whether the normalized answer (every item of a list answer) occurs in the
// think text.
bool is_hit(const CandidateResponse& candidate);
double hit_rate(std::span<const CandidateResponse> candidates);

struct MissRateRow {
  Triplet triplet;
  std::size_t frequency = 0;
  std::size_t misses = 0;
  double miss_rate = 0.0;
};

inline constexpr std::size_t kDefaultMinFrequency = 20;

// Triplets found in more than `min_frequency` reference records, with the
// fraction of those records whose generated side lacks the triplet. Sorted
// by miss rate, then frequency, descending.
std::vector<MissRateRow> miss_rate_report(std::span<const TripletSet> reference,
                                          std::span<const TripletSet> generated,
                                          std::size_t min_frequency =
                                              kDefaultMinFrequency);

struct EvalConfig {
  double align_threshold = kDefaultAlignThreshold;
  std::optional<std::size_t> scs_k;
  std::size_t min_frequency = kDefaultMinFrequency;
};

struct TypeAccuracy {
  std::size_t count = 0;
  std::size_t correct = 0;
};

struct PrecisionRecall {
  MatchCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PrecisionRecall micro_average(const MatchCounts& pooled);

struct CorpusReport {
  std::size_t records = 0;
  double accuracy = 0.0;
  std::map<QuestionType, TypeAccuracy> by_question_type;
  std::map<AnswerType, TypeAccuracy> by_answer_type;
  PrecisionRecall entity;
  PrecisionRecall relation;
  GraphMetrics graph;
  double hit_rate = 0.0;
  std::vector<MissRateRow> miss_rates;
  EvalConfig config;
};

// Evaluates the first candidate of every record. Throws MissingCandidate and
// UnknownRecord.
CorpusReport corpus_report(const std::vector<QARecord>& corpus,
                           const std::vector<CandidateResponse>& candidates,
                           const Extractor& extractor,
                           const EvalConfig& config = {},
                           const SidecarMap* sidecar = nullptr);

std::string report_to_json(const CorpusReport& report);
// Header "triplet,frequency,miss_rate".
std::string miss_rates_to_csv(std::span<const MissRateRow> rows);

}  // namespace kgr

#endif  // KGR_METRICS_HPP_
