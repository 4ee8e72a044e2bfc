#include "kgr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "kgr/error.hpp"
#include "kgr/text.hpp"

namespace kgr {

double kg_nsc(const KnowledgeGraph& reference, const KnowledgeGraph& generated,
              const NodeSimilarityFn& similarity) {
  if (reference.empty()) return 1.0;
  if (generated.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : reference.nodes()) {
    double best = 0.0;
    for (const auto& g : generated.nodes()) best = std::max(best, similarity(r, g));
    total += best;
  }
  return total / static_cast<double>(reference.size());
}

double row_correlation(std::span<const double> a, std::span<const double> b) {
  if (std::equal(a.begin(), a.end(), b.begin(), b.end())) return 1.0;
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

double kg_ams(const KnowledgeGraph& reference, const KnowledgeGraph& generated,
              const NodeAlignment& alignment) {
  const std::size_t n = reference.size();
  if (n == 0) return 1.0;
  std::vector<double> ref_row(n), gen_row(n);
  double weighted = 0.0, weights = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      ref_row[j] = reference.linked(i, j) ? 1.0 : 0.0;
      const auto& mi = alignment.mapping[i];
      const auto& mj = alignment.mapping[j];
      gen_row[j] =
          mi && mj && generated.linked(mi->generated, mj->generated) ? 1.0 : 0.0;
    }
    const double w =
        static_cast<double>(std::max<std::size_t>(1, reference.degree(i)));
    weighted += w * row_correlation(gen_row, ref_row);
    weights += w;
  }
  return weighted / weights;
}

double kg_scs(const KnowledgeGraph& reference, const KnowledgeGraph& generated,
              const NodeAlignment& alignment, const ImportanceTable& importance,
              std::optional<std::size_t> k) {
  std::vector<std::pair<double, const Triplet*>> ranked;
  for (const auto& t : reference.edges()) {
    auto it = importance.find(t);
    ranked.push_back({it == importance.end() ? 1.0 : it->second, &t});
  }
  if (ranked.empty()) return 1.0;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  const std::size_t take =
      std::min(k.value_or(kDefaultScsK), ranked.size());
  if (take == 0) return 1.0;

  double weighted = 0.0, weights = 0.0, plain = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    const Triplet& t = *ranked[i].second;
    const std::size_t h = *reference.index_of(t.head);
    const std::size_t tl = *reference.index_of(t.tail);
    const auto& mh = alignment.mapping[h];
    const auto& mt = alignment.mapping[tl];
    double edge = 0.0;
    if (mh && mt) {
      const Triplet mapped{generated.nodes()[mh->generated], t.relation,
                           generated.nodes()[mt->generated]};
      edge = generated.has_edge(mapped) ? 1.0 : 0.0;
    }
    const double node =
        (alignment.mapped_score(h) + alignment.mapped_score(tl)) / 2.0;
    const double presence = 0.5 * (edge + node);
    weighted += ranked[i].first * presence;
    weights += ranked[i].first;
    plain += presence;
  }
  if (weights <= 0.0) return plain / static_cast<double>(take);
  return weighted / weights;
}

bool is_hit(const CandidateResponse& candidate) {
  if (candidate.format_error) return false;
  const std::string think = text::collapse(candidate.think);
  const auto answer = normalize_answer(candidate.answer);
  if (const auto* s = std::get_if<std::string>(&answer)) {
    return !s->empty() && think.find(*s) != std::string::npos;
  }
  for (const auto& item : std::get<std::set<std::string>>(answer)) {
    if (think.find(item) == std::string::npos) return false;
  }
  return true;
}

double hit_rate(std::span<const CandidateResponse> candidates) {
  if (candidates.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& c : candidates) hits += is_hit(c) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(candidates.size());
}

std::vector<MissRateRow> miss_rate_report(std::span<const TripletSet> reference,
                                          std::span<const TripletSet> generated,
                                          std::size_t min_frequency) {
  if (reference.size() != generated.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "reference and generated record counts differ");
  }
  std::map<Triplet, MissRateRow> rows;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    for (const auto& t : reference[i]) {
      auto& row = rows[t];
      row.triplet = t;
      ++row.frequency;
      if (generated[i].count(t) == 0) ++row.misses;
    }
  }
  std::vector<MissRateRow> out;
  for (auto& [t, row] : rows) {
    if (row.frequency <= min_frequency) continue;
    row.miss_rate =
        static_cast<double>(row.misses) / static_cast<double>(row.frequency);
    out.push_back(row);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.miss_rate != b.miss_rate) return a.miss_rate > b.miss_rate;
    return a.frequency > b.frequency;
  });
  return out;
}

PrecisionRecall micro_average(const MatchCounts& pooled) {
  PrecisionRecall out;
  out.counts = pooled;
  out.precision = match_score(pooled, MatchMetric::kPrecision);
  out.recall = match_score(pooled, MatchMetric::kRecall);
  out.f1 = match_score(pooled, MatchMetric::kF1);
  return out;
}

CorpusReport corpus_report(const std::vector<QARecord>& corpus,
                           const std::vector<CandidateResponse>& candidates,
                           const Extractor& extractor,
                           const EvalConfig& config,
                           const SidecarMap* sidecar) {
  std::map<std::string, const CandidateResponse*> first;
  std::set<std::string> ids;
  for (const auto& r : corpus) ids.insert(r.id);
  for (const auto& c : candidates) {
    if (ids.count(c.record_id) == 0) {
      throw Error(ErrorCode::kUnknownRecord,
                  "candidate for unknown record \"" + c.record_id + "\"");
    }
    first.emplace(c.record_id, &c);
  }

  CorpusReport report;
  report.config = config;
  report.records = corpus.size();
  for (int q = 0; q < kNumQuestionTypes; ++q) {
    report.by_question_type[static_cast<QuestionType>(q)] = {};
  }
  report.by_answer_type[AnswerType::kOpen] = {};
  report.by_answer_type[AnswerType::kClosed] = {};

  std::vector<Extraction> refs, gens;
  std::vector<CandidateResponse> chosen;
  refs.reserve(corpus.size());
  gens.reserve(corpus.size());
  for (const auto& r : corpus) {
    auto it = first.find(r.id);
    if (it == first.end()) {
      throw Error(ErrorCode::kMissingCandidate, "record \"" + r.id + "\"");
    }
    chosen.push_back(*it->second);
    refs.push_back(reference_extraction(r, extractor, sidecar));
    gens.push_back(chosen.back().format_error
                       ? Extraction{}
                       : extractor.extract(chosen.back().think));
  }

  ImportanceTable importance;
  for (const auto& ex : refs) {
    for (const auto& t : ex.triplets) importance[t] += 1.0;
  }

  MatchCounts entity_pool, relation_pool;
  std::size_t correct = 0;
  GraphMetrics sums;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus[i];
    const auto& c = chosen[i];
    const bool ok = !c.format_error &&
                    answer_reward(c.answer, r.reference_answer) == 1.0;
    correct += ok ? 1 : 0;
    auto& qt = report.by_question_type[r.question_type];
    auto& at = report.by_answer_type[r.answer_type];
    ++qt.count;
    ++at.count;
    qt.correct += ok ? 1 : 0;
    at.correct += ok ? 1 : 0;

    entity_pool += match_counts(gens[i].entities, refs[i].entities);
    relation_pool += match_counts(gens[i].triplets, refs[i].triplets);

    const auto ref_graph = build_graph(refs[i]);
    const auto gen_graph = build_graph(gens[i]);
    const auto alignment = align(ref_graph, gen_graph, config.align_threshold);
    sums.nsc += kg_nsc(ref_graph, gen_graph);
    sums.ams += kg_ams(ref_graph, gen_graph, alignment);
    sums.scs += kg_scs(ref_graph, gen_graph, alignment, importance, config.scs_k);
  }

  if (!corpus.empty()) {
    const auto n = static_cast<double>(corpus.size());
    report.accuracy = static_cast<double>(correct) / n;
    report.graph = {sums.nsc / n, sums.ams / n, sums.scs / n};
  }
  report.entity = micro_average(entity_pool);
  report.relation = micro_average(relation_pool);
  report.hit_rate = hit_rate(chosen);

  std::vector<TripletSet> ref_triplets, gen_triplets;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ref_triplets.push_back(refs[i].triplets);
    gen_triplets.push_back(gens[i].triplets);
  }
  report.miss_rates =
      miss_rate_report(ref_triplets, gen_triplets, config.min_frequency);
  return report;
}

namespace {

nlohmann::json accuracy_json(const TypeAccuracy& a) {
  nlohmann::json j = {{"count", a.count}, {"correct", a.correct}};
  if (a.count == 0) {
    j["accuracy"] = nullptr;
  } else {
    j["accuracy"] =
        static_cast<double>(a.correct) / static_cast<double>(a.count);
  }
  return j;
}

nlohmann::json prf_json(const PrecisionRecall& p) {
  return {{"precision", p.precision},
          {"recall", p.recall},
          {"f1", p.f1},
          {"intersection", p.counts.intersection},
          {"generated", p.counts.generated},
          {"reference", p.counts.reference}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_to_json(const CorpusReport& report) {
  nlohmann::ordered_json j;
  j["records"] = report.records;
  nlohmann::ordered_json acc;
  acc["overall"] = report.accuracy;
  nlohmann::ordered_json by_q, by_a;
  for (const auto& [type, a] : report.by_question_type) {
    by_q[std::string(to_string(type))] = accuracy_json(a);
  }
  for (const auto& [type, a] : report.by_answer_type) {
    by_a[std::string(to_string(type))] = accuracy_json(a);
  }
  acc["by_question_type"] = by_q;
  acc["by_answer_type"] = by_a;
  j["accuracy"] = acc;
  j["entity"] = prf_json(report.entity);
  j["relation"] = prf_json(report.relation);
  j["graph"] = {{"kg_nsc", report.graph.nsc},
                {"kg_ams", report.graph.ams},
                {"kg_scs", report.graph.scs}};
  j["hit_rate"] = report.hit_rate;
  nlohmann::ordered_json misses = nlohmann::ordered_json::array();
  for (const auto& row : report.miss_rates) {
    misses.push_back({{"triplet", to_string(row.triplet)},
                      {"frequency", row.frequency},
                      {"misses", row.misses},
                      {"miss_rate", row.miss_rate}});
  }
  j["miss_rates"] = misses;
  nlohmann::ordered_json settings;
  settings["align_threshold"] = report.config.align_threshold;
  if (report.config.scs_k) {
    settings["scs_k"] = *report.config.scs_k;
  } else {
    settings["scs_k"] = "min(10, reference edges)";
  }
  settings["min_frequency"] = report.config.min_frequency;
  // These definitions are stand-ins chosen by this tool; label them.
  settings["substitutes"] = {
      {"node_similarity", "token Jaccard within entity type"},
      {"ams_row_weight", "max(1, reference node degree)"},
      {"ams_adjacency", "binary, relation-label blind"},
      {"scs_subgraph", "single reference triplet"},
      {"scs_importance", "reference corpus triplet frequency"}};
  j["settings"] = settings;
  return j.dump(2) + "\n";
}

std::string miss_rates_to_csv(std::span<const MissRateRow> rows) {
  std::ostringstream out;
  out << "triplet,frequency,miss_rate\n";
  out.precision(17);
  for (const auto& row : rows) {
    out << csv_field(to_string(row.triplet)) << ',' << row.frequency << ','
        << row.miss_rate << '\n';
  }
  return out.str();
}

}  // namespace kgr
