#pragma once

// The three derived application solvers: soft optimal control by backward
// recursion over a log-partition value function, exact adaptive estimation
// by Bayesian predictive distributions, and the Bayesian control rule for
// adaptive control.
//
// Control works over interaction histories ao_<t = (a_1,o_1,...). Histories
// at level t are ranked lexicographically, first pair most significant:
// rank(h + (a,o)) = rank(h) * nA * nO + a * nO + o.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "braid/conjugate.hpp"
#include "braid/errors.hpp"
#include "braid/rng.hpp"

namespace braid::solvers {

using conjugate::Temperature;

// ---------------------------------------------------------------------------
// Soft optimal control

struct ControlProblem {
  size_t horizon = 0;
  size_t num_actions = 0;
  size_t num_observations = 0;
  Temperature alpha{1.0};

  // Dense per-level tables. Level t holds histories of t (a,o) pairs.
  //   reference[t]     : H_t * nA          R(a | ao_<t)
  //   environment[t]   : H_t * nA * nO     Q(o | ao_<t a)
  //   reward_action[t] : H_t * nA          r(a | ao_<t)
  //   reward_obs[t]    : H_t * nA * nO     r(o | ao_<t a)
  std::vector<std::vector<double>> reference;
  std::vector<std::vector<double>> environment;
  std::vector<std::vector<double>> reward_action;
  std::vector<std::vector<double>> reward_obs;

  size_t num_histories(size_t t) const;

  // Validates shapes, normalization and enumerability. Throws
  // CapacityError with the measured size when the dense tables would
  // exceed kMaxTableEntries.
  static constexpr size_t kMaxTableEntries = size_t{1} << 24;
  static ControlProblem make(size_t horizon, size_t num_actions, size_t num_observations,
                             Temperature alpha, std::vector<std::vector<double>> reference,
                             std::vector<std::vector<double>> environment,
                             std::vector<std::vector<double>> reward_action,
                             std::vector<std::vector<double>> reward_obs);
};

// The solved agent: per-history action distributions plus the log-partition
// values V(ao_<t) = log2 Z^alpha(ao_<t). The agent's observation model is
// the environment's (the estimation half of the variational split).
struct Policy {
  size_t horizon = 0;
  size_t num_actions = 0;
  size_t num_observations = 0;
  std::vector<std::vector<double>> action;  // per level: H_t * nA
  std::vector<std::vector<double>> value;   // per level: H_t

  std::span<const double> action_row(size_t t, size_t history_rank) const;
  double log_partition(size_t t, size_t history_rank) const;
};

Policy solve_optimal_control(const ControlProblem& problem,
                             std::optional<Temperature> alpha_override = std::nullopt);

// The alpha -> 0 limit: classic finite-horizon dynamic programming.
// Ties break to the lowest action index.
struct DpSolution {
  std::vector<std::vector<size_t>> action;  // per level: H_t
  std::vector<std::vector<double>> value;   // per level: H_t, V0
};

DpSolution dp_limit(const ControlProblem& problem);

// Expected total reward of an arbitrary per-level stochastic policy under
// the problem's environment; shared by tests and the brute-force oracle.
double policy_expected_reward(const ControlProblem& problem,
                              const std::vector<std::vector<double>>& action_tables);

// ---------------------------------------------------------------------------
// Adaptive estimation

struct EstimationProblem {
  std::vector<double> prior;  // over the parameter set
  size_t num_symbols = 0;
  size_t horizon = 0;
  // P(o | theta, o_<n): distribution over symbols given parameter index
  // and past observations.
  std::function<std::vector<double>(size_t, std::span<const size_t>)> likelihood;
};

struct PredictiveResult {
  std::vector<double> posterior;   // w(theta | o_<n)
  std::vector<double> predictive;  // P(o_n | o_<n)
};

// Batch Bayes over the whole history. Throws ZeroProbabilityError when the
// history has no mass under the mixture.
PredictiveResult predictive_update(const EstimationProblem& problem,
                                   std::span<const size_t> history);

// Sequential form of the same computation; agrees with the batch result
// on every prefix.
class PredictiveTracker {
 public:
  explicit PredictiveTracker(EstimationProblem problem);

  const std::vector<double>& posterior() const { return posterior_; }
  std::vector<double> predictive() const;
  void observe(size_t symbol);
  std::span<const size_t> history() const { return history_; }

 private:
  EstimationProblem problem_;
  std::vector<double> posterior_;
  std::vector<size_t> history_;
};

// ---------------------------------------------------------------------------
// Bayesian control rule

struct Interaction {
  size_t action;
  size_t observation;

  bool operator==(const Interaction&) const = default;
};

// Per-parameter knowledge: a controller designed for that parameter and
// the environment likelihood under it.
struct BcrComponent {
  // P(a | theta, ao_<t)
  std::function<std::vector<double>(std::span<const Interaction>)> controller;
  // P(o | theta, ao_<t, a_t)
  std::function<std::vector<double>(std::span<const Interaction>, size_t)> likelihood;
};

enum class BcrActMode {
  MixtureSampling,  // sample from the posterior-mixture action distribution
  ParameterFirst,   // sample theta from the posterior, then act from its controller
};

// Online adaptive controller: a posterior over parameters plus the
// interaction log. Immutable; bcr_observe returns the updated agent.
class BcrAgent {
 public:
  // likelihood_floor > 0 turns on the epsilon-floor for misspecified
  // models; the default 0 is exact Bayes (zero-likelihood prunes forever).
  static BcrAgent make(std::vector<BcrComponent> components, std::vector<double> prior,
                       size_t num_actions, size_t num_observations,
                       double likelihood_floor = 0.0);

  size_t num_params() const { return components_.size(); }
  size_t num_actions() const { return num_actions_; }
  size_t num_observations() const { return num_observations_; }
  std::span<const double> posterior() const { return posterior_; }
  std::span<const Interaction> log() const { return log_; }

  // sum_theta w(theta) P(a | theta, log)
  std::vector<double> action_predictive() const;

  friend size_t bcr_act(const BcrAgent& agent, Rng& rng, BcrActMode mode);
  friend BcrAgent bcr_observe(const BcrAgent& agent, size_t action, size_t observation);

 private:
  BcrAgent() = default;

  std::vector<BcrComponent> components_;
  std::vector<double> posterior_;
  std::vector<Interaction> log_;
  size_t num_actions_ = 0;
  size_t num_observations_ = 0;
  double likelihood_floor_ = 0.0;
};

// Samples an action. Both modes draw from the same distribution.
size_t bcr_act(const BcrAgent& agent, Rng& rng, BcrActMode mode = BcrActMode::MixtureSampling);

// Posterior reweighted by the observation likelihood only. The action is a
// causal update: it pins its variable without touching the past, so it
// contributes no likelihood factor of its own.
BcrAgent bcr_observe(const BcrAgent& agent, size_t action, size_t observation);

}  // namespace braid::solvers
