#include "kgr/reward.hpp"

#include <cmath>

#include "kgr/error.hpp"
#include "kgr/text.hpp"

namespace kgr {

void validate(const RewardWeights& weights) {
  for (double w : {weights.answer, weights.entity, weights.relation}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::kConfigError,
                  "reward weights must be finite and >= 0");
    }
  }
}

std::string_view to_string(MatchMetric metric) {
  switch (metric) {
    case MatchMetric::kJaccard: return "jaccard";
    case MatchMetric::kF1: return "f1";
    case MatchMetric::kPrecision: return "precision";
    case MatchMetric::kRecall: return "recall";
  }
  return "?";
}

std::optional<MatchMetric> parse_match_metric(std::string_view name) {
  const std::string n = text::to_lower(text::trim(name));
  if (n == "jaccard") return MatchMetric::kJaccard;
  if (n == "f1") return MatchMetric::kF1;
  if (n == "precision") return MatchMetric::kPrecision;
  if (n == "recall") return MatchMetric::kRecall;
  return std::nullopt;
}

double match_score(const MatchCounts& c, MatchMetric metric) {
  if (c.generated == 0 && c.reference == 0) return 1.0;
  if (c.generated == 0 || c.reference == 0) return 0.0;
  const auto inter = static_cast<double>(c.intersection);
  const double precision = inter / static_cast<double>(c.generated);
  const double recall = inter / static_cast<double>(c.reference);
  switch (metric) {
    case MatchMetric::kJaccard:
      return inter / static_cast<double>(c.generated + c.reference -
                                         c.intersection);
    case MatchMetric::kPrecision:
      return precision;
    case MatchMetric::kRecall:
      return recall;
    case MatchMetric::kF1:
      if (precision + recall == 0.0) return 0.0;
      return 2.0 * precision * recall / (precision + recall);
  }
  return 0.0;
}

double answer_reward(std::string_view candidate_answer,
                     std::string_view reference_answer) {
  return normalize_answer(candidate_answer) ==
                 normalize_answer(reference_answer)
             ? 1.0
             : 0.0;
}

RewardBreakdown composite_reward(double r_ans, double r_ent, double r_rel,
                                 const RewardWeights& weights) {
  RewardBreakdown b;
  b.r_ans = r_ans;
  b.r_ent = r_ent;
  b.r_rel = r_rel;
  b.total = weights.answer * r_ans + weights.entity * r_ent +
            weights.relation * r_rel;
  return b;
}

Extraction reference_extraction(const QARecord& record,
                                const Extractor& extractor,
                                const SidecarMap* sidecar) {
  if (sidecar != nullptr) {
    if (auto it = sidecar->find(record.id); it != sidecar->end()) {
      return it->second;
    }
  }
  return extractor.extract(record.reference_think);
}

RewardScorer::RewardScorer(const Extractor& extractor, RewardWeights weights,
                           MatchMetric metric)
    : extractor_(&extractor), weights_(weights), metric_(metric) {
  validate(weights_);
}

RewardBreakdown RewardScorer::score(const Extraction& reference,
                                    std::string_view reference_answer,
                                    const CandidateResponse& candidate) const {
  if (candidate.format_error) return composite_reward(0, 0, 0, weights_);
  return score(reference, reference_answer, candidate.think, candidate.answer);
}

RewardBreakdown RewardScorer::score(const Extraction& reference,
                                    std::string_view reference_answer,
                                    std::string_view think,
                                    std::string_view answer) const {
  const Extraction generated = extractor_->extract(think);
  return composite_reward(
      answer_reward(answer, reference_answer),
      entity_reward(generated.entities, reference.entities, metric_),
      relation_reward(generated.triplets, reference.triplets, metric_),
      weights_);
}

}  // namespace kgr
