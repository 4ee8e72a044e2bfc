#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgr/corpus.hpp"
#include "kgr/error.hpp"
#include "kgr/extract.hpp"
#include "kgr/kgraph.hpp"
#include "kgr/toy_env.hpp"

namespace kgr::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kCommands[] = {"extract", "score", "mine", "train",
                                     "eval"};

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfigError, message);
}

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

bool train_writes_csv_path(const RunConfig& c) {
  return c.command == "train" && c.out.extension() == ".csv";
}

fs::path output_dir(const RunConfig& c) {
  if (train_writes_csv_path(c)) {
    return c.out.has_parent_path() ? c.out.parent_path() : fs::path(".");
  }
  return c.out;
}

fs::path output_path(const RunConfig& c, const std::string& name) {
  if (train_writes_csv_path(c) && name == "trajectory.csv") return c.out;
  return output_dir(c) / name;
}

void require_file(const fs::path& p, const char* flag, bool required) {
  if (p.empty()) {
    if (required) config_error(std::string("missing ") + flag);
    return;
  }
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    config_error(std::string(flag) + " " + p.string() + " is not a file");
  }
}

Extractor make_extractor(const RunConfig& c) {
  return Extractor(
      c.lexicon.empty() ? Lexicon::builtin() : Lexicon::load(c.lexicon),
      c.patterns.empty() ? PatternSet::builtin() : PatternSet::load(c.patterns));
}

std::optional<SidecarMap> maybe_sidecar(const RunConfig& c) {
  if (c.sidecar.empty()) return std::nullopt;
  return load_sidecar(c.sidecar);
}

std::string run_extract(const RunConfig& c) {
  const auto corpus = load_corpus(c.corpus);
  const auto extractor = make_extractor(c);
  const auto sidecar = maybe_sidecar(c);
  std::map<std::string, const CandidateResponse*> first;
  std::vector<CandidateResponse> candidates;
  if (!c.candidates.empty()) {
    candidates = load_candidates(c.candidates);
    for (const auto& cand : candidates) first.emplace(cand.record_id, &cand);
  }
  std::string out;
  for (const auto& r : corpus) {
    nlohmann::ordered_json line;
    line["id"] = r.id;
    line["reference"] = nlohmann::ordered_json::parse(graph_to_json(build_graph(
        reference_extraction(r, extractor, sidecar ? &*sidecar : nullptr))));
    if (auto it = first.find(r.id); it != first.end()) {
      const auto& cand = *it->second;
      line["generated"] = nlohmann::ordered_json::parse(graph_to_json(build_graph(
          cand.format_error ? Extraction{} : extractor.extract(cand.think))));
      if (cand.format_error) {
        line["format_error"] = std::string(to_string(*cand.format_error));
      }
    }
    out += line.dump() + "\n";
  }
  return out;
}

std::string run_score(const RunConfig& c) {
  const auto corpus = load_corpus(c.corpus);
  const auto candidates = load_candidates(c.candidates);
  const auto extractor = make_extractor(c);
  const auto sidecar = maybe_sidecar(c);
  const RewardScorer scorer(extractor, c.weights, c.metric);

  std::map<std::string, const QARecord*> by_id;
  for (const auto& r : corpus) by_id[r.id] = &r;
  std::map<std::string, Extraction> references;
  std::map<std::string, int> next_index;
  std::string out;
  for (const auto& cand : candidates) {
    auto it = by_id.find(cand.record_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kUnknownRecord,
                  "candidate for unknown record \"" + cand.record_id + "\"");
    }
    auto ref = references.find(cand.record_id);
    if (ref == references.end()) {
      ref = references
                .emplace(cand.record_id,
                         reference_extraction(*it->second, extractor,
                                              sidecar ? &*sidecar : nullptr))
                .first;
    }
    const auto b = scorer.score(ref->second, it->second->reference_answer, cand);
    nlohmann::ordered_json line;
    line["record_id"] = cand.record_id;
    line["candidate_index"] = next_index[cand.record_id]++;
    line["r_ans"] = b.r_ans;
    line["r_ent"] = b.r_ent;
    line["r_rel"] = b.r_rel;
    line["total"] = b.total;
    if (cand.format_error) {
      line["format_error"] = std::string(to_string(*cand.format_error));
    }
    out += line.dump() + "\n";
  }
  return out;
}

std::map<std::string, std::string> run_mine(const RunConfig& c) {
  auto corpus = load_corpus(c.corpus);
  if (!c.embeddings.empty()) load_embeddings(c.embeddings, corpus);
  const auto candidates = load_candidates(c.candidates);
  const auto result = mine(corpus, candidates, c.mining);

  nlohmann::ordered_json summary;
  summary["sampled"] = result.sampled;
  summary["scored"] = result.scored;
  summary["skipped_without_candidate"] = result.skipped_without_candidate;
  summary["hard"] = result.hard;
  nlohmann::ordered_json neighbors = nlohmann::ordered_json::object();
  for (const auto& [id, ids] : result.neighbors) neighbors[id] = ids;
  summary["neighbors"] = neighbors;
  summary["examples"] = result.examples.size();
  return {{"train_set.jsonl", mined_to_jsonl(result)},
          {"mining_summary.json", summary.dump(2) + "\n"}};
}

std::map<std::string, std::string> run_train(const RunConfig& c) {
  const auto extractor = make_extractor(c);
  const auto env = ToyEnvironment::bundled(extractor);
  auto policy = env.make_policy(c.reference_prior);
  const RewardScorer scorer(extractor, c.weights, c.metric);
  std::string csv = "step,reward_mean,r_ans,r_ent,r_rel,kl_mean\n";
  train(env, policy, scorer, c.grpo, [&](const TrajectoryPoint& p) {
    csv += std::to_string(p.step) + "," + fmt(p.reward_mean) + "," +
           fmt(p.r_ans) + "," + fmt(p.r_ent) + "," + fmt(p.r_rel) + "," +
           fmt(p.kl_mean) + "\n";
  });
  std::string params = "[";
  const auto values = policy.parameters();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) params += ",";
    params += fmt(values[i]);
  }
  params += "]\n";
  return {{"trajectory.csv", csv}, {"policy.json", params}};
}

std::map<std::string, std::string> run_eval(const RunConfig& c) {
  const auto corpus = load_corpus(c.corpus);
  const auto candidates = load_candidates(c.candidates);
  const auto extractor = make_extractor(c);
  const auto sidecar = maybe_sidecar(c);
  const auto report = corpus_report(corpus, candidates, extractor, c.eval,
                                    sidecar ? &*sidecar : nullptr);
  return {{"report.json", report_to_json(report)},
          {"miss_rates.csv", miss_rates_to_csv(report.miss_rates)}};
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

std::optional<RunConfig> parse_args(const std::vector<std::string>& args,
                                    std::ostream& out) {
  RunConfig c;
  CLI::App app{"Knowledge-graph consistency rewards, hard-example mining and "
               "toy GRPO training for chain-of-thought responses.",
               "kgr"};
  app.set_config("--config", "", "Flat key=value config file");
  app.require_subcommand(1, 1);

  std::string corpus, candidates, embeddings, lexicon, patterns, sidecar, outp;
  std::vector<double> weights{1.0, 0.5, 0.5};
  std::string metric = "jaccard";
  std::size_t scs_k = 0;
  app.add_option("--seed", c.seed, "Seed for every stochastic step");
  app.add_option("--out", outp, "Output directory (train also accepts a .csv path)");
  app.add_option("--corpus", corpus, "QA corpus JSONL");
  app.add_option("--candidates", candidates, "Candidate responses JSONL");
  app.add_option("--embeddings", embeddings, "Embedding JSONL (emb_q/emb_t/emb_v)");
  app.add_option("--lexicon", lexicon, "Entity lexicon JSONL");
  app.add_option("--patterns", patterns, "Relation pattern JSONL");
  app.add_option("--sidecar", sidecar, "Precomputed reference extractions JSONL");
  app.add_option("--weights", weights, "Reward weights w_ans,w_ent,w_rel")
      ->delimiter(',')
      ->expected(3);
  app.add_option("--metric", metric, "jaccard | f1 | precision | recall");
  app.add_option("--gamma", c.mining.gamma, "Stratified sampling ratio");
  app.add_option("--sigma", c.mining.sigma, "Log-probability threshold");
  app.add_option("--topk", c.mining.top_k, "Neighbors retrieved per hard record");
  app.add_option("--steps", c.grpo.steps, "Training steps");
  app.add_option("--group-size", c.grpo.group_size, "Samples per prompt (G)");
  app.add_option("--beta", c.grpo.beta, "KL coefficient");
  app.add_option("--eps", c.grpo.eps, "Lower clip range");
  app.add_option("--eps-high", c.grpo.eps_high, "Upper clip range");
  app.add_option("--lr", c.grpo.learning_rate, "Learning rate");
  app.add_option("--batch-size", c.grpo.batch_size, "Prompts per step");
  app.add_option("--updates-per-step", c.grpo.updates_per_step,
                 "Gradient steps per sampled batch");
  app.add_option("--prior", c.reference_prior,
                 "Initial probability multiplier of reference choices");
  app.add_option("--align-threshold", c.eval.align_threshold,
                 "Node alignment threshold");
  app.add_option("--scs-k", scs_k, "Subgraphs scored by KG-SCS (0: default)");
  app.add_option("--min-frequency", c.eval.min_frequency,
                 "Miss-rate report frequency cut-off");

  for (const char* name : kCommands) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("extract")->description("Dump reference/generated graphs");
  app.get_subcommand("score")->description("Reward breakdown per candidate");
  app.get_subcommand("mine")->description("Hard-example mining");
  app.get_subcommand("train")->description("GRPO on the synthetic environment");
  app.get_subcommand("eval")->description("Corpus report and miss rates");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    config_error(e.what());
  }

  for (const char* name : kCommands) {
    if (app.got_subcommand(name)) c.command = name;
  }
  c.corpus = corpus;
  c.candidates = candidates;
  c.embeddings = embeddings;
  c.lexicon = lexicon;
  c.patterns = patterns;
  c.sidecar = sidecar;
  if (!outp.empty()) c.out = outp;
  c.weights = {weights[0], weights[1], weights[2]};
  const auto m = parse_match_metric(metric);
  if (!m) config_error("unknown metric \"" + metric + "\"");
  c.metric = *m;
  if (scs_k > 0) c.eval.scs_k = scs_k;
  c.mining.seed = c.seed;
  c.grpo.seed = c.seed;
  return c;
}

void validate(const RunConfig& c) {
  const bool needs_corpus = c.command != "train";
  const bool needs_candidates =
      c.command == "score" || c.command == "mine" || c.command == "eval";
  require_file(c.corpus, "--corpus", needs_corpus);
  require_file(c.candidates, "--candidates", needs_candidates);
  require_file(c.embeddings, "--embeddings", false);
  require_file(c.lexicon, "--lexicon", false);
  require_file(c.patterns, "--patterns", false);
  require_file(c.sidecar, "--sidecar", false);
  kgr::validate(c.weights);
  kgr::validate(c.mining);
  kgr::validate(c.grpo);
  if (!(c.reference_prior > 0.0)) config_error("--prior must be > 0");
  if (!(c.eval.align_threshold >= 0.0 && c.eval.align_threshold <= 1.0)) {
    config_error("--align-threshold must be in [0, 1]");
  }
  std::error_code ec;
  const auto dir = output_dir(c);
  if (fs::exists(dir, ec) && !fs::is_directory(dir, ec)) {
    config_error("--out " + dir.string() + " is not a directory");
  }
}

std::map<std::string, std::string> execute(const RunConfig& c) {
  if (c.command == "extract") return {{"graphs.jsonl", run_extract(c)}};
  if (c.command == "score") return {{"scores.jsonl", run_score(c)}};
  if (c.command == "mine") return run_mine(c);
  if (c.command == "train") return run_train(c);
  if (c.command == "eval") return run_eval(c);
  config_error("unknown command \"" + c.command + "\"");
}

void write_outputs(const RunConfig& c,
                   const std::map<std::string, std::string>& outputs) {
  const auto dir = output_dir(c);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  }
  auto write = [](const fs::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    f << content;
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  };
  nlohmann::ordered_json meta;
  meta["command"] = c.command;
  meta["timestamp"] = iso_timestamp();
  meta["seed"] = c.seed;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& [name, content] : outputs) {
    const auto p = output_path(c, name);
    write(p, content);
    files.push_back(p.string());
  }
  meta["outputs"] = files;
  write(dir / "run_metadata.json", meta.dump(2) + "\n");
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  try {
    const auto config = parse_args(args, out);
    if (!config) return 0;
    validate(*config);
    const auto outputs = execute(*config);
    write_outputs(*config, outputs);
    return 0;
  } catch (const Error& e) {
    nlohmann::ordered_json j;
    j["error"] = std::string(to_string(e.code()));
    j["message"] = e.detail();
    if (e.line()) j["line"] = *e.line();
    err << j.dump() << "\n";
    return e.code() == ErrorCode::kConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    nlohmann::ordered_json j;
    j["error"] = "InternalError";
    j["message"] = e.what();
    err << j.dump() << "\n";
    return 1;
  }
}

}  // namespace kgr::cli
