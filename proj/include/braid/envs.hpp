#pragma once

// Desk-scale environments and the interaction protocol: the environment
// draws a hidden parameter once, then the agent and environment exchange
// (action, observation) symbols in cycles. Rewards ride inside the
// observation symbols; a reward map converts symbols to reals for
// bookkeeping. The hidden parameter is owned by the trial runner and is
// never reachable through the agent-facing interface.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "braid/solvers.hpp"

namespace braid::envs {

using solvers::BcrActMode;
using solvers::BcrAgent;
using solvers::Interaction;

struct Environment {
  size_t num_params = 0;
  size_t num_actions = 0;
  size_t num_observations = 0;
  std::vector<double> param_prior;

  // P(o | theta, ao_<t, a_t); stateless, history passed explicitly.
  std::function<std::vector<double>(size_t, std::span<const Interaction>, size_t)> observe_dist;

  // Reward carried by each observation symbol.
  std::vector<double> observation_reward;

  // Expected per-step reward of the best action given theta and history;
  // the baseline regret is measured against.
  std::function<double(size_t, std::span<const Interaction>)> oracle_step_reward;
};

// Two-armed-or-more Bernoulli bandit. arm_means[theta][a] is the success
// probability of arm a under parameter theta; observations are {0, 1}
// with reward equal to the symbol.
Environment make_bernoulli_bandit(std::vector<std::vector<double>> arm_means,
                                  std::vector<double> prior);

// Finite MDP with per-parameter transition tables. The observation encodes
// (next state, reward symbol); the agent is not told the Markov structure,
// its per-theta likelihoods carry it.
//   transitions[theta][a * num_states + s] = row over next states
//   reward_symbol(s, a, s') = index into reward_values
Environment make_finite_mdp(size_t num_states,
                            std::vector<std::vector<std::vector<double>>> transitions,
                            std::function<size_t(size_t, size_t, size_t)> reward_symbol,
                            std::vector<double> reward_values, size_t initial_state,
                            std::vector<double> prior);

// An agent whose per-theta likelihoods mirror the environment's candidates
// and whose controllers are supplied per theta. This is the construction-
// level seam: the agent only ever sees its own components.
BcrAgent agent_for_environment(
    const Environment& env,
    std::vector<std::function<std::vector<double>(std::span<const Interaction>)>> controllers,
    double likelihood_floor = 0.0);

// Greedy per-theta bandit controllers: pull the arm with the best mean.
std::vector<std::function<std::vector<double>(std::span<const Interaction>)>>
greedy_bandit_controllers(const std::vector<std::vector<double>>& arm_means);

struct TrialStep {
  size_t action;
  size_t observation;
  double reward;
  std::vector<double> posterior;  // after observing
};

struct TrialRecord {
  uint64_t seed = 0;
  size_t true_param = 0;  // experimenter-side bookkeeping; the agent never sees it
  std::vector<TrialStep> steps;
  double cumulative_reward = 0.0;
  double oracle_reward = 0.0;
  double regret = 0.0;  // oracle_reward - cumulative_reward

  bool operator==(const TrialRecord&) const = default;
};

bool operator==(const TrialStep&, const TrialStep&);

// Runs the cycle protocol: theta is drawn once from the environment prior
// and kept hidden; each cycle the agent acts, the environment responds,
// the agent observes. Fully reproducible from the seed.
TrialRecord run_interaction(const BcrAgent& agent, const Environment& env, size_t horizon,
                            uint64_t seed, BcrActMode mode = BcrActMode::MixtureSampling);

}  // namespace braid::envs
