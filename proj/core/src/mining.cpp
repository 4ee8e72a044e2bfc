#include "kgr/mining.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "json.hpp"
#include "kgr/error.hpp"
#include "kgr/reward.hpp"
#include "kgr/rng.hpp"

namespace kgr {

void validate(const MiningConfig& config) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "gamma must be in (0, 1]");
  }
  if (!(config.sigma < 0.0)) {
    throw Error(ErrorCode::kConfigError, "sigma must be < 0");
  }
}

double normalized_logprob(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) {
    throw Error(ErrorCode::kEmptyAnswer, "no answer token log-probabilities");
  }
  double sum = 0.0;
  for (double lp : token_logprobs) sum += lp;
  return sum / static_cast<double>(token_logprobs.size());
}

std::vector<QARecord> stratified_sample(const std::vector<QARecord>& records,
                                        double gamma, std::uint64_t seed) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "gamma must be in (0, 1]");
  }
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i) {
    strata[{static_cast<int>(records[i].question_type),
            static_cast<int>(records[i].answer_type)}]
        .push_back(i);
  }
  std::vector<std::size_t> chosen;
  for (auto& [key, members] : strata) {
    const std::size_t n = members.size();
    // The epsilon keeps products like 0.02 * 50 from rounding up to 2.
    auto take = static_cast<std::size_t>(
        std::ceil(gamma * static_cast<double>(n) - 1e-9));
    take = std::clamp<std::size_t>(take, 1, n);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(key.first),
                        static_cast<std::uint64_t>(key.second)));
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.below(n - i);
      std::swap(members[i], members[j]);
      chosen.push_back(members[i]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<QARecord> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(records[i]);
  return out;
}

std::set<std::string> select_hard(std::span<const ScoredCandidate> scored,
                                  double sigma) {
  std::set<std::string> hard;
  for (const auto& s : scored) {
    if (!s.is_correct || s.p < sigma) hard.insert(s.record_id);
  }
  return hard;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double combined_similarity(const QARecord& a, const QARecord& b) {
  double total = 0.0;
  for (Modality m : kAllModalities) {
    const auto ia = a.embeddings.find(m);
    const auto ib = b.embeddings.find(m);
    if (ia == a.embeddings.end() || ib == b.embeddings.end()) {
      const auto& who = ia == a.embeddings.end() ? a.id : b.id;
      throw Error(ErrorCode::kMissingEmbedding,
                  "record \"" + who + "\" has no " +
                      std::string(to_string(m)) + " embedding");
    }
    total += cosine_similarity(ia->second, ib->second);
  }
  return total;
}

std::map<std::string, std::vector<std::string>> topk_retrieve(
    std::span<const QARecord> hard, std::span<const QARecord> rest,
    std::size_t k) {
  if (k > rest.size()) {
    throw Error(ErrorCode::kKTooLarge, "K=" + std::to_string(k) + " but only " +
                                           std::to_string(rest.size()) +
                                           " candidates");
  }
  std::map<std::string, std::vector<std::string>> out;
  std::vector<std::pair<double, std::size_t>> scores(rest.size());
  for (const auto& h : hard) {
    for (std::size_t j = 0; j < rest.size(); ++j) {
      scores[j] = {combined_similarity(h, rest[j]), j};
    }
    std::partial_sort(scores.begin(),
                      scores.begin() + static_cast<std::ptrdiff_t>(k),
                      scores.end(), [&](const auto& x, const auto& y) {
                        if (x.first != y.first) return x.first > y.first;
                        return rest[x.second].id < rest[y.second].id;
                      });
    auto& ids = out[h.id];
    for (std::size_t j = 0; j < k; ++j) ids.push_back(rest[scores[j].second].id);
  }
  return out;
}

MiningResult mine(const std::vector<QARecord>& corpus,
                  const std::vector<CandidateResponse>& candidates,
                  const MiningConfig& config) {
  validate(config);
  std::map<std::string, const QARecord*> by_id;
  for (const auto& r : corpus) by_id[r.id] = &r;
  std::map<std::string, const CandidateResponse*> first_candidate;
  for (const auto& c : candidates) {
    if (by_id.count(c.record_id) == 0) {
      throw Error(ErrorCode::kUnknownRecord,
                  "candidate for unknown record \"" + c.record_id + "\"");
    }
    first_candidate.emplace(c.record_id, &c);
  }

  MiningResult result;
  const auto sample = stratified_sample(corpus, config.gamma, config.seed);
  result.sampled = sample.size();
  std::vector<ScoredCandidate> scored;
  for (const auto& r : sample) {
    auto it = first_candidate.find(r.id);
    if (it == first_candidate.end()) {
      ++result.skipped_without_candidate;
      continue;
    }
    const CandidateResponse& c = *it->second;
    ScoredCandidate s;
    s.record_id = r.id;
    s.is_correct = !c.format_error &&
                   answer_reward(c.answer, r.reference_answer) == 1.0;
    if (s.is_correct) {
      if (!c.answer_token_logprobs) {
        throw Error(ErrorCode::kValidationError,
                    "candidate for \"" + r.id +
                        "\" has no answer_token_logprobs");
      }
      s.p = normalized_logprob(*c.answer_token_logprobs);
    }
    scored.push_back(std::move(s));
  }
  result.scored = scored.size();
  result.hard = select_hard(scored, config.sigma);

  std::set<std::string> retrieved;
  if (config.top_k > 0 && !result.hard.empty()) {
    std::vector<QARecord> hard_records, rest_records;
    for (const auto& r : corpus) {
      (result.hard.count(r.id) ? hard_records : rest_records).push_back(r);
    }
    result.neighbors = topk_retrieve(hard_records, rest_records, config.top_k);
    for (const auto& [id, ids] : result.neighbors) {
      retrieved.insert(ids.begin(), ids.end());
    }
  }
  for (const auto& r : corpus) {
    if (result.hard.count(r.id)) {
      result.examples.push_back({&r, false});
    } else if (retrieved.count(r.id)) {
      result.examples.push_back({&r, true});
    }
  }
  return result;
}

std::string mined_to_jsonl(const MiningResult& result) {
  std::string out;
  for (const auto& ex : result.examples) {
    const nlohmann::json line = {
        {"id", ex.record->id},
        {"question", ex.record->question},
        {"reference_think", ex.record->reference_think},
        {"reference_answer", ex.record->reference_answer},
        {"origin", ex.retrieved ? "retrieved" : "hard"}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace kgr
