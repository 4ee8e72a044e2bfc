#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "kgr/extract.hpp"
#include "kgr/metrics.hpp"
#include "kgr/mining.hpp"
#include "kgr/reward.hpp"
#include "kgr/toy_env.hpp"

namespace {

using namespace kgr;

void BM_SetMatch(benchmark::State& state) {
  std::mt19937 gen(1);
  const auto n = static_cast<int>(state.range(0));
  std::set<int> a, b;
  for (int i = 0; i < n; ++i) {
    a.insert(static_cast<int>(gen() % (2 * n)));
    b.insert(static_cast<int>(gen() % (2 * n)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(set_match(a, b, MatchMetric::kF1));
  }
}
BENCHMARK(BM_SetMatch)->Arg(8)->Arg(64)->Arg(512);

const char* kReport =
    "Small left pleural effusion with adjacent atelectasis at the left lung "
    "base. Increased opacity in the right lower lobe suggestive of pneumonia. "
    "Endotracheal tube terminates in the trachea. Mild pulmonary edema. "
    "Cardiac silhouette is enlarged. No pneumothorax.";

void BM_Extract(benchmark::State& state) {
  const Extractor ex;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ex.extract(kReport));
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(std::string_view(kReport).size()));
}
BENCHMARK(BM_Extract);

void BM_GraphMetrics(benchmark::State& state) {
  const Extractor ex;
  const auto ref = build_graph(ex.extract(kReport));
  const auto gen = build_graph(ex.extract(
      "Left pleural effusion. Opacity suggestive of pneumonia. Mild edema."));
  const ImportanceTable importance;
  for (auto _ : state) {
    const auto al = align(ref, gen);
    benchmark::DoNotOptimize(kg_nsc(ref, gen));
    benchmark::DoNotOptimize(kg_ams(ref, gen, al));
    benchmark::DoNotOptimize(kg_scs(ref, gen, al, importance));
  }
}
BENCHMARK(BM_GraphMetrics);

void BM_TopK(benchmark::State& state) {
  std::mt19937 gen(2);
  std::normal_distribution<double> z(0.0, 1.0);
  auto make = [&](const std::string& id) {
    QARecord r;
    r.id = id;
    for (Modality m : kAllModalities) {
      std::vector<double> v(64);
      for (double& x : v) x = z(gen);
      r.embeddings[m] = std::move(v);
    }
    return r;
  };
  std::vector<QARecord> hard, rest;
  for (int i = 0; i < 20; ++i) hard.push_back(make("h" + std::to_string(i)));
  for (int i = 0; i < state.range(0); ++i) rest.push_back(make("r" + std::to_string(i)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(topk_retrieve(hard, rest, 5));
  }
}
BENCHMARK(BM_TopK)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const Extractor ex;
  const auto env = ToyEnvironment::bundled(ex);
  const RewardScorer scorer(ex);
  GrpoConfig config;
  config.steps = 1;
  config.learning_rate = 1.0;
  auto policy = env.make_policy();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    config.seed = seed++;
    benchmark::DoNotOptimize(train(env, policy, scorer, config));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
