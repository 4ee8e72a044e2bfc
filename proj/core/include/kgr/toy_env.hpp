#ifndef KGR_TOY_ENV_HPP_
#define KGR_TOY_ENV_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kgr/extract.hpp"
#include "kgr/grpo.hpp"
#include "kgr/reward.hpp"

namespace kgr {

// A statement the toy policy can emit, with the entities and triplets the
// sentence is meant to carry.
struct StatementTemplate {
  std::string sentence;
  Extraction annotation;
};

struct ToyPrompt {
  std::string question;
  std::vector<int> reference_templates;
  int reference_answer = 0;
};

// Synthetic task: each prompt has a reference reasoning chain made of
// templates plus a reference answer. A policy sequence picks one template
// per slot and one answer, rendered into a tagged response.
class ToyEnvironment {
 public:
  ToyEnvironment(std::vector<StatementTemplate> templates,
                 std::vector<std::string> answers,
                 std::vector<ToyPrompt> prompts, std::size_t slots,
                 const Extractor& extractor);

  // Eight radiology templates, four answers, four prompts, three slots.
  static ToyEnvironment bundled(const Extractor& extractor);

  std::size_t num_prompts() const { return prompts_.size(); }
  std::size_t num_slots() const { return slots_; }
  const std::vector<StatementTemplate>& templates() const { return templates_; }
  const std::vector<std::string>& answers() const { return answers_; }
  const ToyPrompt& prompt(std::size_t i) const { return prompts_[i]; }

  std::string reference_think(std::size_t prompt) const;
  const Extraction& reference(std::size_t prompt) const {
    return references_[prompt];
  }
  const std::string& reference_answer(std::size_t prompt) const {
    return answers_[static_cast<std::size_t>(prompts_[prompt].reference_answer)];
  }

  // "<think>s1 s2 s3</think><answer>a</answer>"
  std::string render(std::span<const int> sequence) const;

  // Policy shaped for this environment. Reference templates (in every slot)
  // and the reference answer start with `reference_prior` times the
  // probability mass of each other choice.
  ToyPolicy make_policy(double reference_prior = 1.0) const;

 private:
  std::vector<StatementTemplate> templates_;
  std::vector<std::string> answers_;
  std::vector<ToyPrompt> prompts_;
  std::size_t slots_;
  std::vector<Extraction> references_;
};

struct TrajectoryPoint {
  int step = 0;
  double reward_mean = 0.0;
  double r_ans = 0.0;
  double r_ent = 0.0;
  double r_rel = 0.0;
  double kl_mean = 0.0;
};

using TrajectoryObserver = std::function<void(const TrajectoryPoint&)>;

// GRPO on the toy environment. Each step snapshots pi_old, samples a group
// per prompt, scores rendered responses through the full reward path, and
// ascends the clipped objective. pi_ref is the policy as passed in.
// Throws NonFiniteGradient.
std::vector<TrajectoryPoint> train(const ToyEnvironment& env, ToyPolicy& policy,
                                   const RewardScorer& scorer,
                                   const GrpoConfig& config,
                                   const TrajectoryObserver& observer = {});

}  // namespace kgr

#endif  // KGR_TOY_ENV_HPP_
