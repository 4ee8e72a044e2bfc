#ifndef KGR_MINING_HPP_
#define KGR_MINING_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kgr/corpus.hpp"

namespace kgr {

struct MiningConfig {
  double gamma = 0.02;
  double sigma = -0.25;
  std::size_t top_k = 1;
  std::uint64_t seed = 0;
};

// Throws ConfigError.
void validate(const MiningConfig& config);

struct ScoredCandidate {
  std::string record_id;
  bool is_correct = false;
  double p = 0.0;
};

// Mean token log-probability of the answer. Throws EmptyAnswer.
double normalized_logprob(std::span<const double> token_logprobs);

// Per (question_type, answer_type) stratum, ceil(gamma * n) records drawn
// without replacement, so every non-empty stratum contributes. Output keeps
// corpus order.
std::vector<QARecord> stratified_sample(const std::vector<QARecord>& records,
                                        double gamma, std::uint64_t seed);

// Wrong answers, plus correct answers with p < sigma.
std::set<std::string> select_hard(std::span<const ScoredCandidate> scored,
                                  double sigma);

// Cosine similarity; 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Sum of per-modality cosines over Q, T and V. Throws MissingEmbedding or
// DimensionMismatch.
double combined_similarity(const QARecord& a, const QARecord& b);

// For each hard record, the K rest records with the largest combined
// similarity, ties by ascending id. Throws KTooLarge when K > |rest|.
std::map<std::string, std::vector<std::string>> topk_retrieve(
    std::span<const QARecord> hard, std::span<const QARecord> rest,
    std::size_t k);

struct MinedExample {
  const QARecord* record = nullptr;
  bool retrieved = false;  // false for records in the hard set itself
};

struct MiningResult {
  std::size_t sampled = 0;
  std::size_t scored = 0;
  std::size_t skipped_without_candidate = 0;
  std::set<std::string> hard;
  std::map<std::string, std::vector<std::string>> neighbors;
  // Deduplicated hard set plus neighbors, in corpus order.
  std::vector<MinedExample> examples;
};

// Stratified sample -> confidence scoring of each sampled record's first
// candidate -> hard set -> Top-K retrieval from the rest of the corpus.
// Sampled records with no candidate are skipped and counted.
MiningResult mine(const std::vector<QARecord>& corpus,
                  const std::vector<CandidateResponse>& candidates,
                  const MiningConfig& config);

// {"id","question","reference_think","reference_answer","origin"} per line.
std::string mined_to_jsonl(const MiningResult& result);

}  // namespace kgr

#endif  // KGR_MINING_HPP_
