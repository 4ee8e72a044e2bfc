#ifndef KGR_GRPO_HPP_
#define KGR_GRPO_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kgr/rng.hpp"

namespace kgr {

struct GrpoConfig {
  int group_size = 8;
  double beta = 0.5;
  double eps = 0.2;
  double eps_high = 0.28;
  // The tabular toy policy needs a far larger step than a VLM fine-tune.
  double learning_rate = 1e-2;
  int steps = 100;
  std::uint64_t seed = 0;
  // Prompts per optimization step, taken round-robin.
  int batch_size = 1;
  // Gradient ascent iterations on each sampled batch.
  int updates_per_step = 1;
};

// Throws ConfigError.
void validate(const GrpoConfig& config);

// Groups whose population std falls below this get all-zero advantages.
inline constexpr double kDegenerateStd = 1e-8;

// (R_i - mean) / std with the population std. Throws GroupTooSmall.
std::vector<double> group_advantages(std::span<const double> rewards);

// k3 estimator r - log r - 1 with r = pi_ref / pi_new, evaluated from log
// probabilities.
double kl_k3(double logp_new, double logp_ref);

// Mean over the group of min(rho A, clip(rho, 1-eps, 1+eps_high) A)
// - beta * k3, with rho = exp(logp_new - logp_old). To be maximized.
// Throws LengthMismatch.
double grpo_objective(std::span<const double> logp_new,
                      std::span<const double> logp_old,
                      std::span<const double> logp_ref,
                      std::span<const double> advantages,
                      const GrpoConfig& config);

// d(objective)/d(logp_new_i) for each group member.
std::vector<double> grpo_objective_gradient(std::span<const double> logp_new,
                                            std::span<const double> logp_old,
                                            std::span<const double> logp_ref,
                                            std::span<const double> advantages,
                                            const GrpoConfig& config);

// Independent categorical heads per prompt: `slots` heads over `templates`
// choices, then an optional answer head over `answers` choices. A sequence
// holds one token per head.
class ToyPolicy {
 public:
  ToyPolicy() = default;
  ToyPolicy(std::size_t prompts, std::size_t slots, std::size_t templates,
            std::size_t answers);

  std::size_t num_prompts() const { return prompts_; }
  std::size_t num_slots() const { return slots_; }
  std::size_t num_templates() const { return templates_; }
  std::size_t num_answers() const { return answers_; }
  std::size_t num_heads() const { return slots_ + (answers_ > 0 ? 1 : 0); }
  std::size_t head_size(std::size_t head) const {
    return head < slots_ ? templates_ : answers_;
  }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> head_logits(std::size_t prompt, std::size_t head);
  std::span<const double> head_logits(std::size_t prompt,
                                      std::size_t head) const;
  double& slot_logit(std::size_t prompt, std::size_t slot, std::size_t k) {
    return head_logits(prompt, slot)[k];
  }
  double& answer_logit(std::size_t prompt, std::size_t a) {
    return head_logits(prompt, slots_)[a];
  }

  // Sum over heads of log softmax(logits)[token]. Throws UnknownToken.
  double sequence_logprob(std::size_t prompt,
                          std::span<const int> sequence) const;

  // grad += weight * d sequence_logprob / d parameters.
  void accumulate_logprob_gradient(std::size_t prompt,
                                   std::span<const int> sequence,
                                   double weight,
                                   std::span<double> grad) const;

  std::vector<int> sample(std::size_t prompt, Rng& rng) const;

  bool operator==(const ToyPolicy&) const = default;

 private:
  std::size_t offset(std::size_t prompt, std::size_t head) const;
  void check_sequence(std::size_t prompt, std::span<const int> sequence) const;

  std::size_t prompts_ = 0;
  std::size_t slots_ = 0;
  std::size_t templates_ = 0;
  std::size_t answers_ = 0;
  std::vector<double> params_;
};

inline double sequence_logprob(const ToyPolicy& policy, std::size_t prompt,
                               std::span<const int> sequence) {
  return policy.sequence_logprob(prompt, sequence);
}

// log softmax(logits)[k], shifted by the max logit.
double log_softmax_at(std::span<const double> logits, std::size_t k);

// One sampled sequence with the quantities frozen at sampling time.
struct Rollout {
  std::size_t prompt = 0;
  std::vector<int> sequence;
  double logp_old = 0.0;
  double logp_ref = 0.0;
  double advantage = 0.0;
};

// grpo_objective averaged over all rollouts, with logp_new taken from
// `policy`.
double batch_objective(const ToyPolicy& policy, std::span<const Rollout> batch,
                       const GrpoConfig& config);

// Analytic gradient of batch_objective with respect to the parameters.
std::vector<double> batch_objective_gradient(const ToyPolicy& policy,
                                             std::span<const Rollout> batch,
                                             const GrpoConfig& config);

}  // namespace kgr

#endif  // KGR_GRPO_HPP_
