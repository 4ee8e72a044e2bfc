#ifndef KGR_REWARD_HPP_
#define KGR_REWARD_HPP_

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <optional>
#include <set>
#include <string_view>

#include "kgr/corpus.hpp"
#include "kgr/extract.hpp"

namespace kgr {

struct RewardWeights {
  double answer = 1.0;
  double entity = 0.5;
  double relation = 0.5;
};

// Throws ConfigError on a negative or non-finite weight.
void validate(const RewardWeights& weights);

enum class MatchMetric { kJaccard, kF1, kPrecision, kRecall };

std::string_view to_string(MatchMetric metric);
std::optional<MatchMetric> parse_match_metric(std::string_view name);

struct MatchCounts {
  std::size_t intersection = 0;
  std::size_t generated = 0;
  std::size_t reference = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    intersection += o.intersection;
    generated += o.generated;
    reference += o.reference;
    return *this;
  }
};

// Scores pooled counts. Both sides empty gives 1 for every metric; exactly
// one side empty gives 0; F1 is 0 when precision and recall are both 0.
double match_score(const MatchCounts& counts, MatchMetric metric);

template <typename T, typename Compare>
MatchCounts match_counts(const std::set<T, Compare>& generated,
                         const std::set<T, Compare>& reference) {
  MatchCounts c;
  c.generated = generated.size();
  c.reference = reference.size();
  auto g = generated.begin();
  auto r = reference.begin();
  const Compare less = generated.key_comp();
  while (g != generated.end() && r != reference.end()) {
    if (less(*g, *r)) {
      ++g;
    } else if (less(*r, *g)) {
      ++r;
    } else {
      ++c.intersection;
      ++g;
      ++r;
    }
  }
  return c;
}

template <typename T, typename Compare>
double set_match(const std::set<T, Compare>& generated,
                 const std::set<T, Compare>& reference, MatchMetric metric) {
  return match_score(match_counts(generated, reference), metric);
}

inline double entity_reward(const EntitySet& generated,
                            const EntitySet& reference,
                            MatchMetric metric = MatchMetric::kJaccard) {
  return set_match(generated, reference, metric);
}

inline double relation_reward(const TripletSet& generated,
                              const TripletSet& reference,
                              MatchMetric metric = MatchMetric::kJaccard) {
  return set_match(generated, reference, metric);
}

// 1 when the normalized answers are equal (scalars, or sets as sets).
double answer_reward(std::string_view candidate_answer,
                     std::string_view reference_answer);

struct RewardBreakdown {
  double r_ans = 0.0;
  double r_ent = 0.0;
  double r_rel = 0.0;
  double total = 0.0;
};

RewardBreakdown composite_reward(double r_ans, double r_ent, double r_rel,
                                 const RewardWeights& weights);

// Reference-side extraction of a record: the sidecar entry when one exists
// for the id, otherwise the extractor run over reference_think.
Extraction reference_extraction(const QARecord& record,
                                const Extractor& extractor,
                                const SidecarMap* sidecar = nullptr);

// Full reward path for one candidate: extract its think block, match against
// the reference extraction, and combine with the answer check.
class RewardScorer {
 public:
  RewardScorer(const Extractor& extractor, RewardWeights weights = {},
               MatchMetric metric = MatchMetric::kJaccard);

  // A candidate whose raw text failed to parse scores 0 on every component.
  RewardBreakdown score(const Extraction& reference,
                        std::string_view reference_answer,
                        const CandidateResponse& candidate) const;
  RewardBreakdown score(const Extraction& reference,
                        std::string_view reference_answer,
                        std::string_view think, std::string_view answer) const;

  const RewardWeights& weights() const { return weights_; }
  MatchMetric metric() const { return metric_; }
  const Extractor& extractor() const { return *extractor_; }

 private:
  const Extractor* extractor_;
  RewardWeights weights_;
  MatchMetric metric_;
};

}  // namespace kgr

#endif  // KGR_REWARD_HPP_
