#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "kgr/grpo.hpp"
#include "kgr/rng.hpp"
#include "support.hpp"

using namespace kgr;
using kgr::test::code_of;
using doctest::Approx;

namespace {

GrpoConfig no_kl() {
  GrpoConfig c;
  c.beta = 0.0;
  return c;
}

double objective1(double rho, double adv, const GrpoConfig& c) {
  const double lnew = std::log(rho);
  const std::vector<double> n{lnew}, o{0.0}, r{lnew}, a{adv};
  return grpo_objective(n, o, r, a, c);
}

}  // namespace

TEST_SUITE("grpo") {

TEST_CASE("group_advantages examples") {
  CHECK(group_advantages(std::vector<double>(8, 1.0)) ==
        std::vector<double>(8, 0.0));
  const auto two = group_advantages(std::vector<double>{0, 1});
  CHECK(two[0] == Approx(-1.0));
  CHECK(two[1] == Approx(1.0));
  const auto skew = group_advantages(std::vector<double>{0, 1, 1, 1, 1, 1, 1, 1});
  CHECK(skew[0] == Approx(-std::sqrt(7.0)).epsilon(1e-12));
  for (int i = 1; i < 8; ++i) {
    CHECK(skew[i] == Approx(1.0 / std::sqrt(7.0)).epsilon(1e-12));
  }
  CHECK(code_of([] { group_advantages(std::vector<double>{1.0}); }) ==
        ErrorCode::kGroupTooSmall);
}

TEST_CASE("kl_k3 examples") {
  CHECK(kl_k3(-1.3, -1.3) == 0.0);
  CHECK(kl_k3(0.0, std::log(2.0)) == Approx(1.0 - std::log(2.0)).epsilon(1e-12));
  CHECK(kl_k3(0.0, std::log(0.5)) == Approx(std::log(2.0) - 0.5).epsilon(1e-12));
}

TEST_CASE("grpo_objective examples") {
  CHECK(objective1(1.0, 1.0, no_kl()) == 1.0);
  CHECK(objective1(1.5, 1.0, no_kl()) == Approx(1.28));
  CHECK(objective1(0.5, -1.0, no_kl()) == Approx(-0.8));
  const std::vector<double> a{1.0}, b{1.0, 2.0};
  CHECK(code_of([&] { grpo_objective(a, b, a, a, GrpoConfig{}); }) ==
        ErrorCode::kLengthMismatch);
}

TEST_CASE("objective is unclipped inside the trust region") {
  std::mt19937 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto c = no_kl();
  for (int t = 0; t < 200; ++t) {
    std::vector<double> n(8), o(8), adv(8);
    double expected = 0.0;
    for (int i = 0; i < 8; ++i) {
      o[i] = -5.0 * std::abs(u(gen));
      const double rho = 1.0 + 0.19 * u(gen);
      n[i] = o[i] + std::log(rho);
      adv[i] = 2.0 * u(gen);
      expected += rho * adv[i];
    }
    CHECK(grpo_objective(n, o, n, adv, c) == Approx(expected / 8).epsilon(1e-12));
  }
}

TEST_CASE("per-sample gradient matches finite differences") {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GrpoConfig c;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> n(6), o(6), r(6), adv(6);
    for (int i = 0; i < 6; ++i) {
      o[i] = -3.0 + u(gen);
      n[i] = o[i] + 0.6 * u(gen);
      r[i] = o[i] + 0.5 * u(gen);
      adv[i] = u(gen);
    }
    const auto g = grpo_objective_gradient(n, o, r, adv, c);
    for (int i = 0; i < 6; ++i) {
      // Skip points sitting on a clip boundary kink.
      const double rho = std::exp(n[i] - o[i]);
      if (std::abs(rho - 0.8) < 1e-3 || std::abs(rho - 1.28) < 1e-3) continue;
      const double h = 1e-6;
      auto plus = n, minus = n;
      plus[i] += h;
      minus[i] -= h;
      const double fd = (grpo_objective(plus, o, r, adv, c) -
                         grpo_objective(minus, o, r, adv, c)) / (2 * h);
      CHECK(g[i] == Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("sequence_logprob") {
  ToyPolicy one(1, 1, 4, 0);
  const std::vector<int> s0{2};
  CHECK(one.sequence_logprob(0, s0) == Approx(std::log(0.25)));

  ToyPolicy sharp(1, 1, 3, 0);
  sharp.slot_logit(0, 0, 1) = 700.0;
  const std::vector<int> s1{1};
  CHECK(sharp.sequence_logprob(0, s1) == Approx(0.0));

  ToyPolicy two(1, 2, 2, 0);
  const std::vector<int> s2{0, 1};
  CHECK(two.sequence_logprob(0, s2) == Approx(2 * std::log(0.5)));

  ToyPolicy with_answer(2, 2, 3, 4);
  const std::vector<int> s3{0, 2, 3};
  CHECK(with_answer.sequence_logprob(1, s3) ==
        Approx(2 * std::log(1.0 / 3) + std::log(0.25)));

  const std::vector<int> bad_token{0, 3, 0}, short_seq{0};
  CHECK(code_of([&] { with_answer.sequence_logprob(0, bad_token); }) ==
        ErrorCode::kUnknownToken);
  CHECK(code_of([&] { with_answer.sequence_logprob(0, short_seq); }) ==
        ErrorCode::kUnknownToken);
  CHECK(code_of([&] { with_answer.sequence_logprob(2, s3); }) ==
        ErrorCode::kUnknownToken);
}

TEST_CASE("sampling follows the softmax") {
  ToyPolicy p(1, 1, 3, 0);
  p.slot_logit(0, 0, 0) = std::log(0.2);
  p.slot_logit(0, 0, 1) = std::log(0.3);
  p.slot_logit(0, 0, 2) = std::log(0.5);
  Rng rng(1);
  std::vector<int> counts(3, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(p.sample(0, rng)[0])];
  CHECK(counts[0] / double(n) == Approx(0.2).epsilon(0.02));
  CHECK(counts[1] / double(n) == Approx(0.3).epsilon(0.02));
  CHECK(counts[2] / double(n) == Approx(0.5).epsilon(0.02));
}

TEST_CASE("positive advantage raises the sequence log-probability") {
  std::mt19937 gen(17);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    ToyPolicy p(2, 3, 5, 2);
    for (double& x : p.parameters()) x = z(gen);
    Rng rng(static_cast<std::uint64_t>(t));
    Rollout r;
    r.prompt = static_cast<std::size_t>(t % 2);
    r.sequence = p.sample(r.prompt, rng);
    r.logp_old = p.sequence_logprob(r.prompt, r.sequence);
    r.logp_ref = r.logp_old;
    r.advantage = 0.5 + std::abs(z(gen));
    const std::vector<Rollout> batch{r};
    const auto g = batch_objective_gradient(p, batch, GrpoConfig{});
    ToyPolicy q = p;
    for (std::size_t i = 0; i < g.size(); ++i) q.parameters()[i] += 1e-2 * g[i];
    CHECK(q.sequence_logprob(r.prompt, r.sequence) > r.logp_old);
  }
}

TEST_CASE("config validation") {
  GrpoConfig c;
  c.group_size = 1;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::kConfigError);
  c = {};
  c.eps_high = 0.0;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::kConfigError);
  c = {};
  c.beta = -0.1;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::kConfigError);
  validate(GrpoConfig{});
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  Rng a(derive_seed(0, 1)), b(derive_seed(0, 1));
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  Rng c(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = c.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(c.below(7) < 7);
  }
}

}
