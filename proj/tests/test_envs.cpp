#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "braid/envs.hpp"
#include "braid/rng.hpp"

using namespace braid;
using namespace braid::envs;

TEST_CASE("bernoulli bandit observation law") {
  SUBCASE("deterministic arms") {
    const Environment env = make_bernoulli_bandit({{1.0, 0.0}}, {1.0});
    const auto d0 = env.observe_dist(0, {}, 0);
    CHECK(d0[1] == 1.0);
    const auto d1 = env.observe_dist(0, {}, 1);
    CHECK(d1[0] == 1.0);
  }

  SUBCASE("fair arms") {
    const Environment env = make_bernoulli_bandit({{0.5, 0.5}}, {1.0});
    for (size_t a = 0; a < 2; ++a) {
      const auto d = env.observe_dist(0, {}, a);
      CHECK(d[0] == doctest::Approx(0.5));
      CHECK(d[1] == doctest::Approx(0.5));
    }
  }

  SUBCASE("empirical mean within 3 sigma") {
    const Environment env = make_bernoulli_bandit({{0.8, 0.2}}, {1.0});
    Rng rng(501);
    const int pulls = 10000;
    double total = 0.0;
    for (int i = 0; i < pulls; ++i) total += rng.sample(env.observe_dist(0, {}, 0));
    const double sigma = std::sqrt(0.8 * 0.2 / pulls);
    CHECK(std::abs(total / pulls - 0.8) < 3 * sigma);
  }

  SUBCASE("means must lie in the unit interval") {
    CHECK_THROWS_AS(make_bernoulli_bandit({{1.2, 0.0}}, {1.0}), ValidationError);
  }
}

TEST_CASE("finite MDP environment") {
  auto reward_symbol = [](size_t, size_t, size_t next) { return next; };

  SUBCASE("identity transitions freeze the state") {
    // Two states, one action; stay put.
    std::vector<std::vector<std::vector<double>>> transitions{
        {{1.0, 0.0}, {0.0, 1.0}}};  // [a*2+s] rows
    const Environment env =
        make_finite_mdp(2, transitions, reward_symbol, {0.0, 1.0}, 0, {1.0});
    std::vector<Interaction> history;
    for (int step = 0; step < 5; ++step) {
      const auto d = env.observe_dist(0, history, 0);
      // Always transitions to state 0 with reward symbol 0.
      CHECK(d[0] == 1.0);
      history.push_back({0, 0});
    }
  }

  SUBCASE("deterministic cycle alternates") {
    std::vector<std::vector<std::vector<double>>> transitions{
        {{0.0, 1.0}, {1.0, 0.0}}};  // 0 -> 1 -> 0
    const Environment env =
        make_finite_mdp(2, transitions, reward_symbol, {0.0, 1.0}, 0, {1.0});
    std::vector<Interaction> history;
    size_t expected_state = 0;
    for (int step = 0; step < 6; ++step) {
      const auto d = env.observe_dist(0, history, 0);
      const size_t next = expected_state == 0 ? 1 : 0;
      const size_t obs = next * 2 + reward_symbol(expected_state, 0, next);
      CHECK(d[obs] == 1.0);
      history.push_back({0, obs});
      expected_state = next;
    }
  }

  SUBCASE("stationary visit frequencies match the chain's eigenvector") {
    // Single action, 2-state chain.
    const std::vector<std::vector<double>> rows{{0.9, 0.1}, {0.3, 0.7}};
    std::vector<std::vector<std::vector<double>>> transitions{{rows[0], rows[1]}};
    const Environment env =
        make_finite_mdp(2, transitions, reward_symbol, {0.0, 1.0}, 0, {1.0});

    // Power iteration oracle for the stationary distribution.
    std::vector<double> pi{0.5, 0.5};
    for (int it = 0; it < 200; ++it) {
      std::vector<double> next(2, 0.0);
      for (size_t s = 0; s < 2; ++s)
        for (size_t n = 0; n < 2; ++n) next[n] += pi[s] * rows[s][n];
      pi = next;
    }

    Rng rng(502);
    std::vector<Interaction> history;
    std::vector<double> visits(2, 0.0);
    size_t state = 0;
    const int steps = 10000;
    for (int step = 0; step < steps; ++step) {
      const auto d = env.observe_dist(0, history, 0);
      const size_t obs = rng.sample(d);
      state = obs / 2;
      visits[state] += 1.0;
      history.push_back({0, obs});
    }
    CHECK(std::abs(visits[0] / steps - pi[0]) < 0.02);
    CHECK(std::abs(visits[1] / steps - pi[1]) < 0.02);
  }

  SUBCASE("non-stochastic rows are rejected") {
    std::vector<std::vector<std::vector<double>>> transitions{{{0.5, 0.4}, {0.0, 1.0}}};
    CHECK_THROWS_AS(
        make_finite_mdp(2, transitions, reward_symbol, {0.0, 1.0}, 0, {1.0}),
        ValidationError);
  }
}

TEST_CASE("run_interaction follows the protocol") {
  const std::vector<std::vector<double>> means{{0.8, 0.2}, {0.2, 0.8}};
  const Environment env = make_bernoulli_bandit(means, {0.5, 0.5});
  const BcrAgent agent = agent_for_environment(env, greedy_bandit_controllers(means));

  SUBCASE("horizon zero yields an empty record") {
    const TrialRecord record = run_interaction(agent, env, 0, 7);
    CHECK(record.steps.empty());
    CHECK(record.cumulative_reward == 0.0);
    CHECK(record.regret == 0.0);
  }

  SUBCASE("degenerate parameter set is a fixed known sequence") {
    const Environment one = make_bernoulli_bandit({{1.0, 0.0}}, {1.0});
    const BcrAgent a = agent_for_environment(one, greedy_bandit_controllers({{1.0, 0.0}}));
    const TrialRecord record = run_interaction(a, one, 10, 3);
    for (const auto& step : record.steps) {
      CHECK(step.action == 0);
      CHECK(step.observation == 1);
      CHECK(step.reward == 1.0);
    }
    CHECK(record.cumulative_reward == 10.0);
    CHECK(record.regret == doctest::Approx(0.0));
  }

  SUBCASE("identical seeds replay bit-identically") {
    const TrialRecord a = run_interaction(agent, env, 200, 42);
    const TrialRecord b = run_interaction(agent, env, 200, 42);
    CHECK(a == b);
    const TrialRecord c = run_interaction(agent, env, 200, 43);
    CHECK_FALSE(a == c);
  }

  SUBCASE("alphabet mismatch is rejected") {
    const Environment wide = make_bernoulli_bandit({{0.5, 0.5, 0.5}}, {1.0});
    CHECK_THROWS_AS(run_interaction(agent, wide, 5, 1), ValidationError);
  }

  SUBCASE("oracle beats the learner on average") {
    double oracle = 0.0, achieved = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
      const TrialRecord record = run_interaction(agent, env, 100, 900 + s);
      oracle += record.oracle_reward;
      achieved += record.cumulative_reward;
    }
    const double sigma = std::sqrt(0.25 * 100) * std::sqrt(static_cast<double>(seeds));
    CHECK(oracle >= achieved - 3 * sigma);
  }

  SUBCASE("the learner locks onto the hidden parameter") {
    const TrialRecord record = run_interaction(agent, env, 400, 11);
    CHECK(record.steps.back().posterior[record.true_param] > 0.95);
    // Late steps mostly pull the good arm.
    double late_reward = 0.0;
    for (size_t t = 300; t < 400; ++t) late_reward += record.steps[t].reward;
    CHECK(late_reward / 100.0 > 0.6);
  }
}
