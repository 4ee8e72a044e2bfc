#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "kgr/toy_env.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using kgr::test::data_dir;
using kgr::test::scratch;
using kgr::test::slurp;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = kgr::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const char* name) {
  return (data_dir() / "fixture" / name).string();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("missing corpus is a config error and writes nothing") {
  const auto dir = scratch("cli_missing") / "out";
  const auto r = run({"eval", "--candidates", fixture("candidates.jsonl"),
                      "--out", dir.string()});
  CHECK(r.code == 2);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j["error"] == "ConfigError");
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("invalid parameters are rejected before any output") {
  const auto dir = scratch("cli_invalid") / "out";
  CHECK(run({"train", "--group-size", "1", "--out", dir.string()}).code == 2);
  CHECK(run({"train", "--weights", "1,0.5", "--out", dir.string()}).code == 2);
  CHECK(run({"train", "--metric", "dice", "--out", dir.string()}).code == 2);
  CHECK(run({"mine", "--corpus", fixture("corpus.jsonl"), "--candidates",
             fixture("candidates.jsonl"), "--sigma", "0.5", "--out",
             dir.string()}).code == 2);
  CHECK(run({"score", "--corpus", "/nonexistent.jsonl", "--candidates",
             fixture("candidates.jsonl"), "--out", dir.string()}).code == 2);
  CHECK(run({"--out", dir.string()}).code == 2);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("module errors carry the line number") {
  const auto dir = scratch("cli_bad_line");
  {
    std::ofstream f(dir / "corpus.jsonl");
    f << slurp(fixture("corpus.jsonl")) << "{\"id\": 3}\n";
  }
  const auto r = run({"eval", "--corpus", (dir / "corpus.jsonl").string(),
                      "--candidates", fixture("candidates.jsonl"), "--out",
                      (dir / "out").string()});
  CHECK(r.code == 1);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j["error"] == "ParseError");
  CHECK(j["line"] == 21);
}

TEST_CASE("train with zero steps") {
  const auto dir = scratch("cli_train0");
  const auto csv = dir / "trajectory.csv";
  REQUIRE(run({"train", "--steps", "0", "--out", csv.string()}).code == 0);
  CHECK(slurp(csv) == "step,reward_mean,r_ans,r_ent,r_rel,kl_mean\n");
  const auto params = nlohmann::json::parse(slurp(dir / "policy.json"));
  const kgr::Extractor ex;
  const auto init = kgr::ToyEnvironment::bundled(ex).make_policy();
  REQUIRE(params.size() == init.parameters().size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(params[i].get<double>() == init.parameters()[i]);
  }
  CHECK(fs::exists(dir / "run_metadata.json"));
}

TEST_CASE("config file values with command-line overrides") {
  const auto dir = scratch("cli_config");
  {
    std::ofstream f(dir / "run.ini");
    f << "steps=4\nseed=9\nweights=1,0,0\nlr=0.5\n";
  }
  REQUIRE(run({"train", "--config", (dir / "run.ini").string(), "--steps", "2",
               "--out", (dir / "a").string()}).code == 0);
  const auto csv = slurp(dir / "a" / "trajectory.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const auto meta = nlohmann::json::parse(slurp(dir / "a" / "run_metadata.json"));
  CHECK(meta["seed"] == 9);
  // weights (1,0,0): reward_mean equals r_ans on every row.
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    CHECK(f[1] == f[2]);
  }
}

TEST_CASE("every command is byte-identical on rerun") {
  const auto base = scratch("cli_rerun");
  const std::vector<std::vector<std::string>> commands = {
      {"extract", "--corpus", fixture("corpus.jsonl"), "--candidates",
       fixture("candidates.jsonl")},
      {"score", "--corpus", fixture("corpus.jsonl"), "--candidates",
       fixture("candidates.jsonl")},
      {"mine", "--corpus", fixture("corpus.jsonl"), "--candidates",
       fixture("candidates.jsonl"), "--embeddings", fixture("embeddings.jsonl"),
       "--gamma", "0.5", "--topk", "2", "--seed", "4"},
      {"train", "--steps", "12", "--seed", "4"},
      {"eval", "--corpus", fixture("corpus.jsonl"), "--candidates",
       fixture("candidates.jsonl"), "--min-frequency", "2"}};
  for (const auto& cmd : commands) {
    for (const char* tag : {"a", "b"}) {
      auto args = cmd;
      args.push_back("--out");
      args.push_back((base / (cmd[0] + tag)).string());
      const auto r = run(args);
      REQUIRE_MESSAGE(r.code == 0, r.err);
    }
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(base / (cmd[0] + "a"))) {
      const auto name = e.path().filename();
      if (name == "run_metadata.json") continue;
      CHECK_MESSAGE(slurp(e.path()) == slurp(base / (cmd[0] + "b") / name),
                    cmd[0], " ", name.string());
      ++compared;
    }
    CHECK(compared >= 1);
  }
}

TEST_CASE("score output") {
  const auto dir = scratch("cli_score");
  REQUIRE(run({"score", "--corpus", fixture("corpus.jsonl"), "--candidates",
               fixture("candidates.jsonl"), "--out", dir.string()}).code == 0);
  std::istringstream in(slurp(dir / "scores.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(in, line); ++n) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["total"].get<double>() ==
          doctest::Approx(j["r_ans"].get<double>() + 0.5 * j["r_ent"].get<double>() +
                          0.5 * j["r_rel"].get<double>()));
    CHECK(j["candidate_index"] == 0);
  }
  CHECK(n == 20);
}

TEST_CASE("help exits cleanly") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("train") != std::string::npos);
}

}
