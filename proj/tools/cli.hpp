#ifndef KGR_TOOLS_CLI_HPP_
#define KGR_TOOLS_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgr/grpo.hpp"
#include "kgr/metrics.hpp"
#include "kgr/mining.hpp"
#include "kgr/reward.hpp"

namespace kgr::cli {

struct RunConfig {
  std::string command;
  std::filesystem::path corpus;
  std::filesystem::path candidates;
  std::filesystem::path embeddings;
  std::filesystem::path lexicon;
  std::filesystem::path patterns;
  std::filesystem::path sidecar;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  RewardWeights weights;
  MatchMetric metric = MatchMetric::kJaccard;
  MiningConfig mining;
  GrpoConfig grpo;
  double reference_prior = 1.0;
  EvalConfig eval;
};

// Parses argv (including an optional --config file; flags override file
// values). Throws Error(ConfigError). Returns nullopt when help was printed.
std::optional<RunConfig> parse_args(const std::vector<std::string>& args,
                                    std::ostream& out);

// Checks every input path and parameter. Throws Error(ConfigError).
void validate(const RunConfig& config);

// Runs the command and returns its primary outputs, file name -> content.
// Nothing touches the filesystem except reads of the inputs.
std::map<std::string, std::string> execute(const RunConfig& config);

// Writes outputs plus run_metadata.json (the only file with a timestamp).
void write_outputs(const RunConfig& config,
                   const std::map<std::string, std::string>& outputs);

// Entry point: parse, validate, execute, write. Returns the exit code; on
// failure prints {"error":..., "message":...} to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace kgr::cli

#endif  // KGR_TOOLS_CLI_HPP_
