#include "kgr/toy_env.hpp"

#include <cmath>
#include <utility>

#include "kgr/corpus.hpp"
#include "kgr/error.hpp"

namespace kgr {

namespace {

StatementTemplate statement(std::string sentence,
                            std::vector<Triplet> triplets) {
  StatementTemplate t;
  t.sentence = std::move(sentence);
  for (auto& tr : triplets) {
    t.annotation.entities.insert(tr.head);
    t.annotation.entities.insert(tr.tail);
    t.annotation.triplets.insert(std::move(tr));
  }
  return t;
}

}  // namespace

ToyEnvironment::ToyEnvironment(std::vector<StatementTemplate> templates,
                               std::vector<std::string> answers,
                               std::vector<ToyPrompt> prompts,
                               std::size_t slots, const Extractor& extractor)
    : templates_(std::move(templates)),
      answers_(std::move(answers)),
      prompts_(std::move(prompts)),
      slots_(slots) {
  if (templates_.empty() || answers_.empty() || prompts_.empty() ||
      slots_ == 0) {
    throw Error(ErrorCode::kValidationError, "empty toy environment");
  }
  for (const auto& p : prompts_) {
    if (p.reference_answer < 0 ||
        static_cast<std::size_t>(p.reference_answer) >= answers_.size()) {
      throw Error(ErrorCode::kValidationError, "reference answer out of range");
    }
    for (int t : p.reference_templates) {
      if (t < 0 || static_cast<std::size_t>(t) >= templates_.size()) {
        throw Error(ErrorCode::kValidationError,
                    "reference template out of range");
      }
    }
  }
  for (std::size_t i = 0; i < prompts_.size(); ++i) {
    references_.push_back(extractor.extract(reference_think(i)));
  }
}

ToyEnvironment ToyEnvironment::bundled(const Extractor& extractor) {
  using E = EntityType;
  using R = RelationType;
  auto e = [](const char* text, E type) { return make_entity(text, type); };
  std::vector<StatementTemplate> templates;
  templates.push_back(statement(
      "Pleural effusion in the right lung.",
      {{e("pleural effusion", E::kDisorder), R::kLocatedAt,
        e("right lung", E::kAnatomy)}}));
  templates.push_back(statement(
      "Opacity suggestive of pneumonia.",
      {{e("opacity", E::kDisorder), R::kSuggestiveOf,
        e("pneumonia", E::kDisorder)}}));
  templates.push_back(statement(
      "Increased opacity.",
      {{e("increased", E::kConcept), R::kModify, e("opacity", E::kDisorder)}}));
  templates.push_back(statement(
      "Tube located at chest.",
      {{e("tube", E::kDevice), R::kLocatedAt, e("chest", E::kAnatomy)}}));
  templates.push_back(statement(
      "Pneumothorax in the left lung.",
      {{e("pneumothorax", E::kDisorder), R::kLocatedAt,
        e("left lung", E::kAnatomy)}}));
  templates.push_back(statement(
      "Atelectasis at the left lung base.",
      {{e("atelectasis", E::kDisorder), R::kLocatedAt,
        e("left lung base", E::kAnatomy)}}));
  templates.push_back(statement(
      "Consolidation consistent with pneumonia.",
      {{e("consolidation", E::kDisorder), R::kSuggestiveOf,
        e("pneumonia", E::kDisorder)}}));
  templates.push_back(statement(
      "Acute edema.",
      {{e("acute", E::kConcept), R::kModify, e("edema", E::kDisorder)}}));

  std::vector<std::string> answers = {"yes", "no", "left lung", "right lung"};
  std::vector<ToyPrompt> prompts = {
      {"Is there a pleural effusion?", {0, 2, 7}, 0},
      {"Where is the pneumothorax located?", {4, 3, 5}, 2},
      {"Is there evidence of pneumonia?", {1, 6, 2}, 0},
      {"Is there a pneumothorax?", {5, 7, 3}, 1},
  };
  return ToyEnvironment(std::move(templates), std::move(answers),
                        std::move(prompts), 3, extractor);
}

std::string ToyEnvironment::reference_think(std::size_t prompt) const {
  std::string out;
  for (int t : prompts_[prompt].reference_templates) {
    if (!out.empty()) out.push_back(' ');
    out += templates_[static_cast<std::size_t>(t)].sentence;
  }
  return out;
}

std::string ToyEnvironment::render(std::span<const int> sequence) const {
  if (sequence.size() != slots_ + 1) {
    throw Error(ErrorCode::kUnknownToken, "sequence length mismatch");
  }
  std::string think;
  for (std::size_t s = 0; s < slots_; ++s) {
    if (sequence[s] < 0 ||
        static_cast<std::size_t>(sequence[s]) >= templates_.size()) {
      throw Error(ErrorCode::kUnknownToken, "template out of range");
    }
    if (!think.empty()) think.push_back(' ');
    think += templates_[static_cast<std::size_t>(sequence[s])].sentence;
  }
  const int a = sequence[slots_];
  if (a < 0 || static_cast<std::size_t>(a) >= answers_.size()) {
    throw Error(ErrorCode::kUnknownToken, "answer out of range");
  }
  return render_response(think, answers_[static_cast<std::size_t>(a)]);
}

ToyPolicy ToyEnvironment::make_policy(double reference_prior) const {
  if (!(reference_prior > 0.0) || !std::isfinite(reference_prior)) {
    throw Error(ErrorCode::kConfigError, "reference prior must be > 0");
  }
  ToyPolicy policy(prompts_.size(), slots_, templates_.size(), answers_.size());
  const double boost = std::log(reference_prior);
  for (std::size_t p = 0; p < prompts_.size(); ++p) {
    for (std::size_t s = 0; s < slots_; ++s) {
      for (int t : prompts_[p].reference_templates) {
        policy.slot_logit(p, s, static_cast<std::size_t>(t)) = boost;
      }
    }
    policy.answer_logit(p, static_cast<std::size_t>(prompts_[p].reference_answer)) =
        boost;
  }
  return policy;
}

std::vector<TrajectoryPoint> train(const ToyEnvironment& env, ToyPolicy& policy,
                                   const RewardScorer& scorer,
                                   const GrpoConfig& config,
                                   const TrajectoryObserver& observer) {
  validate(config);
  if (policy.num_prompts() != env.num_prompts() ||
      policy.num_slots() != env.num_slots() ||
      policy.num_templates() != env.templates().size() ||
      policy.num_answers() != env.answers().size()) {
    throw Error(ErrorCode::kConfigError,
                "policy dimensions do not match the environment");
  }
  const ToyPolicy reference = policy;
  const auto group = static_cast<std::size_t>(config.group_size);
  const auto batch_prompts = static_cast<std::size_t>(config.batch_size);
  std::vector<TrajectoryPoint> trajectory;
  trajectory.reserve(static_cast<std::size_t>(config.steps));

  for (int step = 1; step <= config.steps; ++step) {
    const ToyPolicy old_policy = policy;
    std::vector<Rollout> batch;
    TrajectoryPoint point;
    point.step = step;

    for (std::size_t b = 0; b < batch_prompts; ++b) {
      const std::size_t prompt =
          (static_cast<std::size_t>(step - 1) * batch_prompts + b) %
          env.num_prompts();
      std::vector<double> rewards;
      const std::size_t first = batch.size();
      for (std::size_t i = 0; i < group; ++i) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(step),
                            b * group + i));
        Rollout r;
        r.prompt = prompt;
        r.sequence = old_policy.sample(prompt, rng);
        r.logp_old = old_policy.sequence_logprob(prompt, r.sequence);
        r.logp_ref = reference.sequence_logprob(prompt, r.sequence);
        const auto candidate = make_candidate("", env.render(r.sequence));
        const auto reward = scorer.score(env.reference(prompt),
                                         env.reference_answer(prompt),
                                         candidate);
        rewards.push_back(reward.total);
        point.reward_mean += reward.total;
        point.r_ans += reward.r_ans;
        point.r_ent += reward.r_ent;
        point.r_rel += reward.r_rel;
        point.kl_mean += kl_k3(r.logp_old, r.logp_ref);
        batch.push_back(std::move(r));
      }
      const auto advantages = group_advantages(rewards);
      for (std::size_t i = 0; i < group; ++i) {
        batch[first + i].advantage = advantages[i];
      }
    }

    const auto n = static_cast<double>(batch.size());
    point.reward_mean /= n;
    point.r_ans /= n;
    point.r_ent /= n;
    point.r_rel /= n;
    point.kl_mean /= n;

    for (int u = 0; u < config.updates_per_step; ++u) {
      const auto grad = batch_objective_gradient(policy, batch, config);
      for (std::size_t k = 0; k < grad.size(); ++k) {
        if (!std::isfinite(grad[k])) {
          throw Error(ErrorCode::kNonFiniteGradient,
                      "step " + std::to_string(step) + ", parameter " +
                          std::to_string(k));
        }
      }
      auto params = policy.parameters();
      for (std::size_t k = 0; k < grad.size(); ++k) {
        params[k] += config.learning_rate * grad[k];
      }
    }

    trajectory.push_back(point);
    if (observer) observer(point);
  }
  return trajectory;
}

}  // namespace kgr
