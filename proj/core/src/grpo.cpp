#include "kgr/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kgr/error.hpp"

namespace kgr {

namespace {

void require_same_length(std::size_t n, std::span<const double> a,
                         std::span<const double> b, std::span<const double> c) {
  if (a.size() != n || b.size() != n || c.size() != n) {
    throw Error(ErrorCode::kLengthMismatch,
                "group inputs must share one length");
  }
}

double surrogate(double ratio, double advantage, const GrpoConfig& config) {
  const double clipped =
      std::clamp(ratio, 1.0 - config.eps, 1.0 + config.eps_high);
  return std::min(ratio * advantage, clipped * advantage);
}

// d surrogate / d logp_new. The clipped branch is flat outside the clip
// range; inside it both branches coincide.
double surrogate_slope(double ratio, double advantage,
                       const GrpoConfig& config) {
  const bool inside =
      ratio >= 1.0 - config.eps && ratio <= 1.0 + config.eps_high;
  if (inside) return ratio * advantage;
  const double clipped =
      std::clamp(ratio, 1.0 - config.eps, 1.0 + config.eps_high);
  return ratio * advantage < clipped * advantage ? ratio * advantage : 0.0;
}

}  // namespace

void validate(const GrpoConfig& c) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kConfigError, what);
  };
  if (c.group_size < 2) fail("group size must be >= 2");
  if (!(c.eps > 0.0) || !(c.eps_high > 0.0)) fail("eps and eps_high must be > 0");
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta)) fail("beta must be >= 0");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    fail("learning rate must be > 0");
  }
  if (c.steps < 0) fail("steps must be >= 0");
  if (c.batch_size < 1) fail("batch size must be >= 1");
  if (c.updates_per_step < 1) fail("updates per step must be >= 1");
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw Error(ErrorCode::kGroupTooSmall,
                "group of " + std::to_string(rewards.size()));
  }
  const auto n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (std_dev < kDegenerateStd) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out[i] = (rewards[i] - mean) / std_dev;
  }
  return out;
}

double kl_k3(double logp_new, double logp_ref) {
  const double log_r = logp_ref - logp_new;
  return std::expm1(log_r) - log_r;
}

double grpo_objective(std::span<const double> logp_new,
                      std::span<const double> logp_old,
                      std::span<const double> logp_ref,
                      std::span<const double> advantages,
                      const GrpoConfig& config) {
  require_same_length(logp_new.size(), logp_old, logp_ref, advantages);
  if (logp_new.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < logp_new.size(); ++i) {
    const double ratio = std::exp(logp_new[i] - logp_old[i]);
    total += surrogate(ratio, advantages[i], config) -
             config.beta * kl_k3(logp_new[i], logp_ref[i]);
  }
  return total / static_cast<double>(logp_new.size());
}

std::vector<double> grpo_objective_gradient(std::span<const double> logp_new,
                                            std::span<const double> logp_old,
                                            std::span<const double> logp_ref,
                                            std::span<const double> advantages,
                                            const GrpoConfig& config) {
  require_same_length(logp_new.size(), logp_old, logp_ref, advantages);
  std::vector<double> grad(logp_new.size(), 0.0);
  const auto n = static_cast<double>(logp_new.size());
  for (std::size_t i = 0; i < logp_new.size(); ++i) {
    const double ratio = std::exp(logp_new[i] - logp_old[i]);
    // d(-beta * k3)/d logp_new = beta * (r - 1), r = pi_ref / pi_new.
    const double kl_slope = config.beta * std::expm1(logp_ref[i] - logp_new[i]);
    grad[i] = (surrogate_slope(ratio, advantages[i], config) + kl_slope) / n;
  }
  return grad;
}

double log_softmax_at(std::span<const double> logits, std::size_t k) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - m);
  return logits[k] - m - std::log(sum);
}

ToyPolicy::ToyPolicy(std::size_t prompts, std::size_t slots,
                     std::size_t templates, std::size_t answers)
    : prompts_(prompts), slots_(slots), templates_(templates), answers_(answers) {
  if (prompts == 0 || (slots == 0 && answers == 0) ||
      (slots > 0 && templates == 0)) {
    throw Error(ErrorCode::kValidationError, "empty toy policy dimensions");
  }
  params_.assign(prompts * (slots * templates + answers), 0.0);
}

std::size_t ToyPolicy::offset(std::size_t prompt, std::size_t head) const {
  return prompt * (slots_ * templates_ + answers_) + head * templates_;
}

std::span<double> ToyPolicy::head_logits(std::size_t prompt, std::size_t head) {
  return std::span<double>(params_).subspan(offset(prompt, head),
                                            head_size(head));
}

std::span<const double> ToyPolicy::head_logits(std::size_t prompt,
                                               std::size_t head) const {
  return std::span<const double>(params_).subspan(offset(prompt, head),
                                                  head_size(head));
}

void ToyPolicy::check_sequence(std::size_t prompt,
                               std::span<const int> sequence) const {
  if (prompt >= prompts_) {
    throw Error(ErrorCode::kUnknownToken,
                "prompt " + std::to_string(prompt) + " out of range");
  }
  if (sequence.size() != num_heads()) {
    throw Error(ErrorCode::kUnknownToken,
                "sequence has " + std::to_string(sequence.size()) +
                    " tokens, policy expects " + std::to_string(num_heads()));
  }
  for (std::size_t h = 0; h < sequence.size(); ++h) {
    if (sequence[h] < 0 ||
        static_cast<std::size_t>(sequence[h]) >= head_size(h)) {
      throw Error(ErrorCode::kUnknownToken,
                  "token " + std::to_string(sequence[h]) + " at position " +
                      std::to_string(h));
    }
  }
}

double ToyPolicy::sequence_logprob(std::size_t prompt,
                                   std::span<const int> sequence) const {
  check_sequence(prompt, sequence);
  double total = 0.0;
  for (std::size_t h = 0; h < sequence.size(); ++h) {
    total += log_softmax_at(head_logits(prompt, h),
                            static_cast<std::size_t>(sequence[h]));
  }
  return total;
}

void ToyPolicy::accumulate_logprob_gradient(std::size_t prompt,
                                            std::span<const int> sequence,
                                            double weight,
                                            std::span<double> grad) const {
  check_sequence(prompt, sequence);
  if (weight == 0.0) return;
  for (std::size_t h = 0; h < sequence.size(); ++h) {
    const auto logits = head_logits(prompt, h);
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - m);
    const std::size_t base = offset(prompt, h);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      const double p = std::exp(logits[k] - m) / sum;
      const double indicator =
          k == static_cast<std::size_t>(sequence[h]) ? 1.0 : 0.0;
      grad[base + k] += weight * (indicator - p);
    }
  }
}

std::vector<int> ToyPolicy::sample(std::size_t prompt, Rng& rng) const {
  std::vector<int> seq(num_heads());
  for (std::size_t h = 0; h < seq.size(); ++h) {
    const auto logits = head_logits(prompt, h);
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - m);
    double u = rng.uniform() * sum;
    std::size_t k = 0;
    for (; k + 1 < logits.size(); ++k) {
      u -= std::exp(logits[k] - m);
      if (u < 0.0) break;
    }
    seq[h] = static_cast<int>(k);
  }
  return seq;
}

double batch_objective(const ToyPolicy& policy, std::span<const Rollout> batch,
                       const GrpoConfig& config) {
  std::vector<double> lnew, lold, lref, adv;
  for (const auto& r : batch) {
    lnew.push_back(policy.sequence_logprob(r.prompt, r.sequence));
    lold.push_back(r.logp_old);
    lref.push_back(r.logp_ref);
    adv.push_back(r.advantage);
  }
  return grpo_objective(lnew, lold, lref, adv, config);
}

std::vector<double> batch_objective_gradient(const ToyPolicy& policy,
                                             std::span<const Rollout> batch,
                                             const GrpoConfig& config) {
  std::vector<double> lnew, lold, lref, adv;
  for (const auto& r : batch) {
    lnew.push_back(policy.sequence_logprob(r.prompt, r.sequence));
    lold.push_back(r.logp_old);
    lref.push_back(r.logp_ref);
    adv.push_back(r.advantage);
  }
  const auto slopes = grpo_objective_gradient(lnew, lold, lref, adv, config);
  std::vector<double> grad(policy.parameters().size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    policy.accumulate_logprob_gradient(batch[i].prompt, batch[i].sequence,
                                       slopes[i], grad);
  }
  return grad;
}

}  // namespace kgr
