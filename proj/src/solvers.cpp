#include "braid/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace braid::solvers {

namespace {

void check_rows(const std::vector<double>& flat, size_t rows, size_t arity, const char* what) {
  if (flat.size() != rows * arity) {
    std::ostringstream os;
    os << what << ": expected " << rows * arity << " entries, got " << flat.size();
    throw ValidationError(os.str());
  }
  for (size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (size_t x = 0; x < arity; ++x) {
      const double p = flat[r * arity + x];
      if (!(p >= 0.0) || !std::isfinite(p))
        throw ValidationError(std::string(what) + ": probabilities must be finite, nonnegative");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      std::ostringstream os;
      os << what << ": row " << r << " sums to " << s;
      throw ValidationError(os.str());
    }
  }
}

void check_finite(const std::vector<double>& flat, const char* what) {
  for (double v : flat)
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": rewards must be finite");
}

}  // namespace

// ---------------------------------------------------------------------------
// ControlProblem

size_t ControlProblem::num_histories(size_t t) const {
  size_t n = 1;
  for (size_t s = 0; s < t; ++s) n *= num_actions * num_observations;
  return n;
}

ControlProblem ControlProblem::make(size_t horizon, size_t num_actions, size_t num_observations,
                                    Temperature alpha,
                                    std::vector<std::vector<double>> reference,
                                    std::vector<std::vector<double>> environment,
                                    std::vector<std::vector<double>> reward_action,
                                    std::vector<std::vector<double>> reward_obs) {
  if (horizon == 0) throw ValidationError("horizon must be at least 1");
  if (num_actions == 0 || num_observations == 0)
    throw ValidationError("alphabets must be nonempty");

  ControlProblem p;
  p.horizon = horizon;
  p.num_actions = num_actions;
  p.num_observations = num_observations;
  p.alpha = alpha;

  // Enumerability check before touching the tables.
  size_t total = 0;
  size_t level = 1;
  for (size_t t = 0; t < horizon; ++t) {
    total += level * num_actions * num_observations;
    level *= num_actions * num_observations;
    if (total > kMaxTableEntries) {
      std::ostringstream os;
      os << "control problem needs more than " << kMaxTableEntries
         << " dense table entries (measured " << total << " through level " << t << ")";
      throw CapacityError(os.str());
    }
  }

  if (reference.size() != horizon || environment.size() != horizon ||
      reward_action.size() != horizon || reward_obs.size() != horizon)
    throw ValidationError("per-level tables must cover every cycle");
  for (size_t t = 0; t < horizon; ++t) {
    const size_t nh = p.num_histories(t);
    check_rows(reference[t], nh, num_actions, "reference policy");
    check_rows(environment[t], nh * num_actions, num_observations, "environment");
    if (reward_action[t].size() != nh * num_actions)
      throw ValidationError("action reward table size mismatch");
    if (reward_obs[t].size() != nh * num_actions * num_observations)
      throw ValidationError("observation reward table size mismatch");
    check_finite(reward_action[t], "action rewards");
    check_finite(reward_obs[t], "observation rewards");
  }
  p.reference = std::move(reference);
  p.environment = std::move(environment);
  p.reward_action = std::move(reward_action);
  p.reward_obs = std::move(reward_obs);
  return p;
}

std::span<const double> Policy::action_row(size_t t, size_t history_rank) const {
  return {action[t].data() + history_rank * num_actions, num_actions};
}

double Policy::log_partition(size_t t, size_t history_rank) const {
  return value[t][history_rank];
}

// ---------------------------------------------------------------------------
// Soft control recursion
//
// Backward over t, in log domain:
//   exponent(a|h) = (1/alpha) r(a|h)
//                 + (1/alpha) sum_o Q(o|ha) r(o|ha)
//                 + sum_o Q(o|ha) V(hao)
//   P(a|h) = R(a|h) 2^exponent / Z^alpha(h),  V(h) = log2 Z^alpha(h)
// The value-to-go of the tail problem is alpha*V, so the downstream V
// enters the exponent unscaled.

Policy solve_optimal_control(const ControlProblem& problem,
                             std::optional<Temperature> alpha_override) {
  const double alpha = alpha_override.value_or(problem.alpha).alpha;
  const size_t T = problem.horizon;
  const size_t nA = problem.num_actions;
  const size_t nO = problem.num_observations;

  Policy policy;
  policy.horizon = T;
  policy.num_actions = nA;
  policy.num_observations = nO;
  policy.action.resize(T);
  policy.value.resize(T);

  std::vector<double> value_next;  // V at level t+1, empty at the horizon
  for (size_t t = T; t-- > 0;) {
    const size_t nh = problem.num_histories(t);
    policy.action[t].assign(nh * nA, 0.0);
    policy.value[t].assign(nh, 0.0);
    std::vector<double> lw(nA);
    std::vector<double> row;
    for (size_t h = 0; h < nh; ++h) {
      for (size_t a = 0; a < nA; ++a) {
        double exponent = problem.reward_action[t][h * nA + a] / alpha;
        for (size_t o = 0; o < nO; ++o) {
          const double q = problem.environment[t][(h * nA + a) * nO + o];
          if (q == 0.0) continue;
          exponent += q * problem.reward_obs[t][(h * nA + a) * nO + o] / alpha;
          if (!value_next.empty()) exponent += q * value_next[(h * nA + a) * nO + o];
        }
        const double lref = log2_safe(problem.reference[t][h * nA + a]);
        lw[a] = lref == kNegInf ? kNegInf : lref + exponent;
      }
      const double lz = log2_normalize(lw, row);
      if (lz == kNegInf)
        throw DegenerateError("reference policy row has no support");
      policy.value[t][h] = lz;
      std::copy(row.begin(), row.end(), policy.action[t].begin() + h * nA);
    }
    value_next = policy.value[t];
  }
  return policy;
}

DpSolution dp_limit(const ControlProblem& problem) {
  const size_t T = problem.horizon;
  const size_t nA = problem.num_actions;
  const size_t nO = problem.num_observations;

  DpSolution sol;
  sol.action.resize(T);
  sol.value.resize(T);

  std::vector<double> value_next;
  for (size_t t = T; t-- > 0;) {
    const size_t nh = problem.num_histories(t);
    sol.action[t].assign(nh, 0);
    sol.value[t].assign(nh, 0.0);
    for (size_t h = 0; h < nh; ++h) {
      double best = kNegInf;
      size_t best_a = 0;
      for (size_t a = 0; a < nA; ++a) {
        double q_val = problem.reward_action[t][h * nA + a];
        for (size_t o = 0; o < nO; ++o) {
          const double q = problem.environment[t][(h * nA + a) * nO + o];
          if (q == 0.0) continue;
          q_val += q * problem.reward_obs[t][(h * nA + a) * nO + o];
          if (!value_next.empty()) q_val += q * value_next[(h * nA + a) * nO + o];
        }
        if (q_val > best) {  // strict: ties keep the lowest index
          best = q_val;
          best_a = a;
        }
      }
      sol.value[t][h] = best;
      sol.action[t][h] = best_a;
    }
    value_next = sol.value[t];
  }
  return sol;
}

double policy_expected_reward(const ControlProblem& problem,
                              const std::vector<std::vector<double>>& action_tables) {
  const size_t T = problem.horizon;
  const size_t nA = problem.num_actions;
  const size_t nO = problem.num_observations;
  if (action_tables.size() != T) throw ValidationError("policy level count mismatch");

  // Backward expectation of the reward-to-go.
  std::vector<double> value_next;
  for (size_t t = T; t-- > 0;) {
    const size_t nh = problem.num_histories(t);
    if (action_tables[t].size() != nh * nA)
      throw ValidationError("policy table size mismatch");
    std::vector<double> value(nh, 0.0);
    for (size_t h = 0; h < nh; ++h) {
      double v = 0.0;
      for (size_t a = 0; a < nA; ++a) {
        const double pa = action_tables[t][h * nA + a];
        if (pa == 0.0) continue;
        double q_val = problem.reward_action[t][h * nA + a];
        for (size_t o = 0; o < nO; ++o) {
          const double q = problem.environment[t][(h * nA + a) * nO + o];
          if (q == 0.0) continue;
          q_val += q * problem.reward_obs[t][(h * nA + a) * nO + o];
          if (!value_next.empty()) q_val += q * value_next[(h * nA + a) * nO + o];
        }
        v += pa * q_val;
      }
      value[h] = v;
    }
    value_next = std::move(value);
  }
  return value_next[0];
}

// ---------------------------------------------------------------------------
// Adaptive estimation

PredictiveResult predictive_update(const EstimationProblem& problem,
                                   std::span<const size_t> history) {
  const size_t K = problem.prior.size();
  if (K == 0) throw ValidationError("empty parameter set");

  std::vector<double> log_w(K);
  for (size_t k = 0; k < K; ++k) log_w[k] = log2_safe(problem.prior[k]);
  std::vector<size_t> prefix;
  prefix.reserve(history.size());
  for (size_t n = 0; n < history.size(); ++n) {
    for (size_t k = 0; k < K; ++k) {
      if (log_w[k] == kNegInf) continue;
      const std::vector<double> lik = problem.likelihood(k, prefix);
      if (history[n] >= lik.size()) throw ValidationError("observation out of range");
      log_w[k] += log2_safe(lik[history[n]]);
    }
    prefix.push_back(history[n]);
  }

  PredictiveResult out;
  if (log2_normalize(log_w, out.posterior) == kNegInf)
    throw ZeroProbabilityError("observation history has probability zero under the mixture");

  out.predictive.assign(problem.num_symbols, 0.0);
  for (size_t k = 0; k < K; ++k) {
    if (out.posterior[k] == 0.0) continue;
    const std::vector<double> lik = problem.likelihood(k, history);
    for (size_t o = 0; o < problem.num_symbols; ++o)
      out.predictive[o] += out.posterior[k] * lik[o];
  }
  return out;
}

PredictiveTracker::PredictiveTracker(EstimationProblem problem) : problem_(std::move(problem)) {
  posterior_ = problem_.prior;
  double s = sum(posterior_);
  if (!(s > 0.0)) throw ValidationError("prior has no mass");
  for (double& w : posterior_) w /= s;
}

std::vector<double> PredictiveTracker::predictive() const {
  std::vector<double> out(problem_.num_symbols, 0.0);
  for (size_t k = 0; k < posterior_.size(); ++k) {
    if (posterior_[k] == 0.0) continue;
    const std::vector<double> lik = problem_.likelihood(k, history_);
    for (size_t o = 0; o < problem_.num_symbols; ++o) out[o] += posterior_[k] * lik[o];
  }
  return out;
}

void PredictiveTracker::observe(size_t symbol) {
  if (symbol >= problem_.num_symbols) throw ValidationError("observation out of range");
  double mass = 0.0;
  for (size_t k = 0; k < posterior_.size(); ++k) {
    if (posterior_[k] == 0.0) continue;
    posterior_[k] *= problem_.likelihood(k, history_)[symbol];
    mass += posterior_[k];
  }
  if (!(mass > 0.0))
    throw ZeroProbabilityError("observation has probability zero under the mixture");
  for (double& w : posterior_) w /= mass;
  history_.push_back(symbol);
}

// ---------------------------------------------------------------------------
// Bayesian control rule

BcrAgent BcrAgent::make(std::vector<BcrComponent> components, std::vector<double> prior,
                        size_t num_actions, size_t num_observations, double likelihood_floor) {
  if (components.empty()) throw ValidationError("empty parameter set");
  if (components.size() != prior.size())
    throw ValidationError("one prior weight per parameter required");
  if (likelihood_floor < 0.0) throw ParameterError("likelihood floor must be nonnegative");
  double s = 0.0;
  for (double w : prior) {
    if (!(w >= 0.0)) throw ValidationError("prior weights must be nonnegative");
    s += w;
  }
  if (!(s > 0.0)) throw ValidationError("prior has no mass");

  BcrAgent agent;
  agent.components_ = std::move(components);
  agent.posterior_ = std::move(prior);
  for (double& w : agent.posterior_) w /= s;
  agent.num_actions_ = num_actions;
  agent.num_observations_ = num_observations;
  agent.likelihood_floor_ = likelihood_floor;
  return agent;
}

std::vector<double> BcrAgent::action_predictive() const {
  std::vector<double> out(num_actions_, 0.0);
  for (size_t k = 0; k < components_.size(); ++k) {
    if (posterior_[k] == 0.0) continue;
    const std::vector<double> pa = components_[k].controller(log_);
    if (pa.size() != num_actions_) throw ValidationError("controller row arity mismatch");
    for (size_t a = 0; a < num_actions_; ++a) out[a] += posterior_[k] * pa[a];
  }
  return out;
}

size_t bcr_act(const BcrAgent& agent, Rng& rng, BcrActMode mode) {
  if (mode == BcrActMode::MixtureSampling) {
    return rng.sample(agent.action_predictive());
  }
  const size_t k = rng.sample(agent.posterior_);
  return rng.sample(agent.components_[k].controller(agent.log_));
}

BcrAgent bcr_observe(const BcrAgent& agent, size_t action, size_t observation) {
  if (action >= agent.num_actions_) throw ValidationError("action out of range");
  if (observation >= agent.num_observations_) throw ValidationError("observation out of range");

  BcrAgent next = agent;
  double mass = 0.0;
  for (size_t k = 0; k < next.components_.size(); ++k) {
    if (next.posterior_[k] == 0.0) continue;
    const std::vector<double> lik = next.components_[k].likelihood(next.log_, action);
    if (lik.size() != next.num_observations_)
      throw ValidationError("likelihood row arity mismatch");
    const double l = std::max(lik[observation], next.likelihood_floor_);
    next.posterior_[k] *= l;
    mass += next.posterior_[k];
  }
  if (!(mass > 0.0))
    throw ZeroProbabilityError("observation impossible under every parameter in support");
  for (double& w : next.posterior_) w /= mass;
  next.log_.push_back({action, observation});
  return next;
}

}  // namespace braid::solvers
