#include "braid/envs.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace braid::envs {

namespace {

std::vector<double> normalized_prior(std::vector<double> prior) {
  double s = 0.0;
  for (double w : prior) {
    if (!(w >= 0.0)) throw ValidationError("prior weights must be nonnegative");
    s += w;
  }
  if (!(s > 0.0)) throw ValidationError("prior has no mass");
  for (double& w : prior) w /= s;
  return prior;
}

}  // namespace

bool operator==(const TrialStep& a, const TrialStep& b) {
  return a.action == b.action && a.observation == b.observation && a.reward == b.reward &&
         a.posterior == b.posterior;
}

Environment make_bernoulli_bandit(std::vector<std::vector<double>> arm_means,
                                  std::vector<double> prior) {
  if (arm_means.empty()) throw ValidationError("bandit needs at least one parameter");
  const size_t num_arms = arm_means[0].size();
  if (num_arms == 0) throw ValidationError("bandit needs at least one arm");
  for (const auto& row : arm_means) {
    if (row.size() != num_arms) throw ValidationError("ragged arm mean table");
    for (double m : row)
      if (!(m >= 0.0 && m <= 1.0)) throw ValidationError("arm means must lie in [0, 1]");
  }
  if (prior.size() != arm_means.size())
    throw ValidationError("one prior weight per parameter required");

  Environment env;
  env.num_params = arm_means.size();
  env.num_actions = num_arms;
  env.num_observations = 2;
  env.param_prior = normalized_prior(std::move(prior));
  env.observation_reward = {0.0, 1.0};
  auto means = std::make_shared<std::vector<std::vector<double>>>(std::move(arm_means));
  env.observe_dist = [means](size_t theta, std::span<const Interaction>, size_t action) {
    const double m = (*means)[theta][action];
    return std::vector<double>{1.0 - m, m};
  };
  env.oracle_step_reward = [means](size_t theta, std::span<const Interaction>) {
    return *std::max_element((*means)[theta].begin(), (*means)[theta].end());
  };
  return env;
}

Environment make_finite_mdp(size_t num_states,
                            std::vector<std::vector<std::vector<double>>> transitions,
                            std::function<size_t(size_t, size_t, size_t)> reward_symbol,
                            std::vector<double> reward_values, size_t initial_state,
                            std::vector<double> prior) {
  if (num_states == 0) throw ValidationError("MDP needs at least one state");
  if (transitions.empty()) throw ValidationError("MDP needs at least one parameter");
  if (reward_values.empty()) throw ValidationError("MDP needs at least one reward symbol");
  if (initial_state >= num_states) throw ValidationError("initial state out of range");
  const size_t num_actions = transitions[0].size() / num_states;
  if (num_actions == 0 || transitions[0].size() != num_actions * num_states)
    throw ValidationError("transition table shape mismatch");
  for (const auto& per_theta : transitions) {
    if (per_theta.size() != num_actions * num_states)
      throw ValidationError("transition table shape mismatch");
    for (const auto& row : per_theta) {
      if (row.size() != num_states) throw ValidationError("transition row arity mismatch");
      double s = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw ValidationError("transition probabilities must be nonnegative");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) throw ValidationError("transition rows must be stochastic");
    }
  }
  if (prior.size() != transitions.size())
    throw ValidationError("one prior weight per parameter required");

  const size_t num_rewards = reward_values.size();
  Environment env;
  env.num_params = transitions.size();
  env.num_actions = num_actions;
  env.num_observations = num_states * num_rewards;
  env.param_prior = normalized_prior(std::move(prior));
  env.observation_reward.resize(env.num_observations);
  for (size_t s = 0; s < num_states; ++s)
    for (size_t r = 0; r < num_rewards; ++r)
      env.observation_reward[s * num_rewards + r] = reward_values[r];

  auto trans = std::make_shared<std::vector<std::vector<std::vector<double>>>>(
      std::move(transitions));
  auto rsym = std::make_shared<std::function<size_t(size_t, size_t, size_t)>>(
      std::move(reward_symbol));

  const size_t ns = num_states, nr = num_rewards, s0 = initial_state;
  env.observe_dist = [trans, rsym, ns, nr, s0](size_t theta,
                                               std::span<const Interaction> history,
                                               size_t action) {
    const size_t state = history.empty() ? s0 : history.back().observation / nr;
    const auto& row = (*trans)[theta][action * ns + state];
    std::vector<double> out(ns * nr, 0.0);
    for (size_t next = 0; next < ns; ++next) {
      if (row[next] == 0.0) continue;
      const size_t r = (*rsym)(state, action, next);
      if (r >= nr) throw ValidationError("reward symbol out of range");
      out[next * nr + r] += row[next];
    }
    return out;
  };

  auto rewards = std::make_shared<std::vector<double>>(env.observation_reward);
  const size_t na = num_actions;
  env.oracle_step_reward = [trans, rsym, rewards, ns, nr, s0, na](
                               size_t theta, std::span<const Interaction> history) {
    const size_t state = history.empty() ? s0 : history.back().observation / nr;
    double best = -kPosInf;
    for (size_t a = 0; a < na; ++a) {
      const auto& row = (*trans)[theta][a * ns + state];
      double v = 0.0;
      for (size_t next = 0; next < ns; ++next) {
        if (row[next] == 0.0) continue;
        v += row[next] * (*rewards)[next * nr + (*rsym)(state, a, next)];
      }
      best = std::max(best, v);
    }
    return best;
  };
  return env;
}

BcrAgent agent_for_environment(
    const Environment& env,
    std::vector<std::function<std::vector<double>(std::span<const Interaction>)>> controllers,
    double likelihood_floor) {
  if (controllers.size() != env.num_params)
    throw ValidationError("one controller per parameter required");
  std::vector<solvers::BcrComponent> components(env.num_params);
  for (size_t k = 0; k < env.num_params; ++k) {
    components[k].controller = controllers[k];
    auto dist = env.observe_dist;
    components[k].likelihood = [dist, k](std::span<const Interaction> history, size_t action) {
      return dist(k, history, action);
    };
  }
  return BcrAgent::make(std::move(components), env.param_prior, env.num_actions,
                        env.num_observations, likelihood_floor);
}

std::vector<std::function<std::vector<double>(std::span<const Interaction>)>>
greedy_bandit_controllers(const std::vector<std::vector<double>>& arm_means) {
  std::vector<std::function<std::vector<double>(std::span<const Interaction>)>> out;
  out.reserve(arm_means.size());
  for (const auto& means : arm_means) {
    const size_t best = static_cast<size_t>(
        std::max_element(means.begin(), means.end()) - means.begin());
    std::vector<double> row(means.size(), 0.0);
    row[best] = 1.0;
    out.push_back([row](std::span<const Interaction>) { return row; });
  }
  return out;
}

TrialRecord run_interaction(const BcrAgent& agent, const Environment& env, size_t horizon,
                            uint64_t seed, BcrActMode mode) {
  if (agent.num_actions() != env.num_actions || agent.num_observations() != env.num_observations)
    throw ValidationError("agent and environment alphabets are incompatible");
  if (agent.num_params() != env.num_params)
    throw ValidationError("agent and environment parameter sets are incompatible");

  Rng root(seed);
  Rng theta_rng = root.child(0);
  Rng agent_rng = root.child(1);
  Rng env_rng = root.child(2);

  const size_t theta = theta_rng.sample(env.param_prior);

  TrialRecord record;
  record.seed = seed;
  record.true_param = theta;
  record.steps.reserve(horizon);

  BcrAgent current = agent;
  for (size_t t = 0; t < horizon; ++t) {
    const size_t a = bcr_act(current, agent_rng, mode);
    record.oracle_reward += env.oracle_step_reward(theta, current.log());
    const std::vector<double> obs_dist = env.observe_dist(theta, current.log(), a);
    const size_t o = env_rng.sample(obs_dist);
    current = bcr_observe(current, a, o);

    TrialStep step;
    step.action = a;
    step.observation = o;
    step.reward = env.observation_reward[o];
    step.posterior.assign(current.posterior().begin(), current.posterior().end());
    record.cumulative_reward += step.reward;
    record.steps.push_back(std::move(step));
  }
  record.regret = record.oracle_reward - record.cumulative_reward;
  return record;
}

}  // namespace braid::envs
