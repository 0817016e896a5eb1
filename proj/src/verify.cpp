#include "braid/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include "braid/conjugate.hpp"
#include "braid/envs.hpp"
#include "braid/gvp.hpp"
#include "braid/prob.hpp"
#include "braid/rng.hpp"
#include "braid/runner.hpp"
#include "braid/solvers.hpp"
#include "braid/transform.hpp"

namespace braid::verify {

namespace {

using conjugate::Temperature;
using conjugate::UtilityVector;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string describe(double violation, const std::string& extra = "") {
  std::ostringstream os;
  os << "max violation " << violation;
  if (!extra.empty()) os << "; " << extra;
  return os.str();
}

// Gibbs computation with the optional fault injection. The corrupted
// variant mis-scales the partition sum; every suite that leans on the
// conversion law must notice.
conjugate::GibbsResult gibbs_for_suite(const UtilityVector& u, Temperature alpha,
                                       const std::string& mutation) {
  conjugate::GibbsResult result = conjugate::measure_from_utility(u, alpha);
  if (mutation == "corrupt-gibbs") {
    result.beta += 0.01;
    if (result.p.size() > 1) {
      result.p[0] = std::min(1.0, result.p[0] + 0.01);
      double s = sum(result.p);
      for (double& v : result.p) v /= s;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Suite 1: conjugation round trip

SuiteResult suite_conjugacy_roundtrip(const VerifyOptions& options) {
  Stopwatch watch;
  Rng rng = Rng(options.seed).child(1);
  const int trials = options.quick ? 100 : 1000;

  double worst = 0.0;
  for (int i = 0; i < trials; ++i) {
    const size_t n = 2 + rng.uniform_below(7);  // alphabet sizes 2..8
    std::vector<double> p = rng.simplex_point(n);
    for (double& v : p) v = std::max(v, 1e-12);
    double s = sum(p);
    for (double& v : p) v /= s;
    const Temperature alpha(rng.uniform(0.1, 10.0));
    const double beta = rng.uniform(-5.0, 5.0);

    const UtilityVector u = conjugate::utility_from_measure(p, alpha, beta);
    const auto back = gibbs_for_suite(u, alpha, options.mutation);
    for (size_t x = 0; x < n; ++x) worst = std::max(worst, std::abs(back.p[x] - p[x]));
    worst = std::max(worst, std::abs(back.beta - beta));
  }

  SuiteResult result;
  result.name = "conjugacy_roundtrip";
  result.max_violation = worst;
  result.tolerance = 1e-9;
  result.pass = worst < result.tolerance;
  result.wall_seconds = watch.seconds();
  result.detail = describe(worst, std::to_string(trials) + " random (p, alpha, beta) triples");
  return result;
}

// ---------------------------------------------------------------------------
// Suite 2: variational maximum

SuiteResult suite_variational_maximum(const VerifyOptions& options) {
  Stopwatch watch;
  Rng rng = Rng(options.seed).child(2);
  const int utils = options.quick ? 20 : 100;
  const int candidates = options.quick ? 1000 : 10000;

  double worst = 0.0;
  for (int i = 0; i < utils; ++i) {
    const size_t n = 2 + rng.uniform_below(5);  // sizes 2..6
    std::vector<double> values(n);
    for (double& v : values) v = rng.uniform(-5.0, 5.0);
    const Temperature alpha(rng.uniform(0.1, 10.0));
    const UtilityVector u(values, 0.0);

    const auto gibbs = gibbs_for_suite(u, alpha, options.mutation);
    const double f_star = conjugate::free_utility(gibbs.p, u, alpha).total;
    worst = std::max(worst, std::abs(f_star - gibbs.beta));
    for (int c = 0; c < candidates; ++c) {
      const std::vector<double> q = rng.simplex_point(n);
      const double f = conjugate::free_utility(q, u, alpha).total;
      worst = std::max(worst, f - f_star);
    }
  }

  SuiteResult result;
  result.name = "variational_maximum";
  result.max_violation = worst;
  result.tolerance = 1e-9;
  result.pass = worst < result.tolerance;
  result.wall_seconds = watch.seconds();
  result.detail =
      describe(worst, std::to_string(utils) + " utilities x " + std::to_string(candidates) +
                          " simplex candidates");
  return result;
}

// ---------------------------------------------------------------------------
// Suite 3: control closed form

SuiteResult suite_control_closed_form(const VerifyOptions& options) {
  Stopwatch watch;
  Rng rng = Rng(options.seed).child(3);
  const int problems = options.quick ? 3 : 10;
  const int perturbations = options.quick ? 1000 : 10000;

  double worst = 0.0;
  for (int i = 0; i < problems; ++i) {
    const size_t n = 2 + rng.uniform_below(5);
    std::vector<double> prior = rng.simplex_point(n);
    for (double& v : prior) v = std::max(v, 1e-9);
    double s = sum(prior);
    for (double& v : prior) v /= s;
    std::vector<double> values(n);
    for (double& v : values) v = rng.uniform(-3.0, 3.0);
    const Temperature alpha(rng.uniform(0.1, 10.0));
    transform::TransformProblem problem(prior, UtilityVector(values, 0.0), alpha);

    const std::vector<double> solution = transform::control_solution(problem);
    const double at_solution = transform::free_utility_difference(
        prior, solution, problem.target_utility, alpha);
    worst = std::max(worst,
                     std::abs(at_solution - transform::control_optimum_value(problem)));

    for (int c = 0; c < perturbations; ++c) {
      // Mix the solution with simplex noise; occasionally pure noise.
      std::vector<double> q = rng.simplex_point(n);
      const double lambda = (c % 10 == 0) ? 1.0 : rng.uniform(0.0, 0.5);
      for (size_t x = 0; x < n; ++x) q[x] = (1.0 - lambda) * solution[x] + lambda * q[x];
      const double f = transform::free_utility_difference(prior, q, problem.target_utility,
                                                          alpha);
      worst = std::max(worst, f - at_solution);
    }
  }

  SuiteResult result;
  result.name = "control_closed_form";
  result.max_violation = worst;
  result.tolerance = 1e-9;
  result.pass = worst < result.tolerance;
  result.wall_seconds = watch.seconds();
  result.detail = describe(worst, std::to_string(problems) + " problems x " +
                                      std::to_string(perturbations) + " perturbations");
  return result;
}

// ---------------------------------------------------------------------------
// Random causal models (suites 4 and 5)

prob::CausalModel random_binary_model(Rng& rng, size_t T,
                                      const std::vector<prob::IoType>& io,
                                      const std::vector<prob::VpMode>& mode) {
  using namespace prob;
  Alphabet binary({"0", "1"});
  std::vector<VariableSpec> variables;
  std::vector<DistTable> tables;
  for (size_t t = 0; t < T; ++t) {
    variables.push_back({"x" + std::to_string(t + 1), binary, io[t], mode[t]});
    size_t nh = 1;
    for (size_t s = 0; s < t; ++s) nh *= 2;
    std::vector<std::vector<double>> rows(nh);
    for (auto& row : rows) {
      row = rng.simplex_point(2);
      for (double& v : row) v = 0.9 * v + 0.05;  // keep support comfortably full
    }
    std::vector<size_t> radices(t, 2);
    tables.emplace_back(std::move(radices), 2, std::move(rows));
  }
  return CausalModel(std::move(variables), std::move(tables));
}

SuiteResult suite_intervention_semantics(const VerifyOptions& options) {
  using namespace prob;
  Stopwatch watch;
  Rng rng = Rng(options.seed).child(4);
  const int models = options.quick ? 20 : 100;

  double worst = 0.0;
  for (int i = 0; i < models; ++i) {
    const size_t T = 2 + rng.uniform_below(3);  // T in 2..4
    std::vector<IoType> io(T, IoType::DisclosedInput);
    std::vector<VpMode> mode(T, VpMode::Estimated);
    const CausalModel model = random_binary_model(rng, T, io, mode);
    std::vector<std::vector<double>> base_marginals(T);
    for (size_t s = 0; s < T; ++s) base_marginals[s] = marginal(model, s);

    for (size_t t = 0; t < T; ++t)
      for (size_t v = 0; v < 2; ++v) {
        const CausalModel did = intervene(model, t, v);
        for (size_t s = 0; s < t; ++s) {
          const std::vector<double> m = marginal(did, s);
          for (size_t x = 0; x < m.size(); ++x)
            worst = std::max(worst, std::abs(m[x] - base_marginals[s][x]));
        }
      }
  }

  // Regression instance: the two-variable chain where conditioning moves
  // the past and intervening does not.
  Alphabet binary({"0", "1"});
  CausalModel chain(
      {{"x1", binary, IoType::DisclosedInput, VpMode::Estimated},
       {"x2", binary, IoType::DisclosedInput, VpMode::Estimated}},
      {DistTable({}, 2, {{0.8, 0.2}}),
       DistTable({2}, 2, {{0.5, 0.5}, {0.9, 0.1}})});
  const double base = marginal(chain, 0)[1];
  const double conditioned = marginal(condition(chain, 1, 0), 0)[1];
  const double intervened = marginal(intervene(chain, 1, 0), 0)[1];
  const double condition_shift = std::abs(conditioned - base);
  const double intervene_shift = std::abs(intervened - base);
  worst = std::max(worst, intervene_shift);

  SuiteResult result;
  result.name = "intervention_semantics";
  result.max_violation = worst;
  result.tolerance = 1e-12;
  result.pass = worst < result.tolerance && condition_shift >= 0.05;
  result.wall_seconds = watch.seconds();
  std::ostringstream detail;
  detail << "past-marginal shift " << worst << "; regression: condition moves past by "
         << condition_shift << ", intervene by " << intervene_shift;
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// Suite 5: GVP oracle equivalence
//
// Raw-array mirror of a GvpProblem for fast candidate evaluation. The
// candidate is parameterized per (variable, visible group); conditionals
// are constant across hidden coordinates by construction.

struct GvpInstance {
  size_t T = 0;
  double alpha = 1.0;
  std::vector<bool> controlled;
  std::vector<bool> observable;
  std::vector<std::vector<double>> ref;     // per var: nh * 2
  std::vector<std::vector<double>> util;    // per var: nh * 2
  std::vector<std::vector<size_t>> group_of;  // per var: rank -> group
  std::vector<size_t> num_groups;

  size_t num_histories(size_t t) const { return size_t{1} << t; }
  size_t num_sequences() const { return size_t{1} << T; }

  // Candidate rows per (variable, group), arity 2.
  using Candidate = std::vector<std::vector<double>>;

  double objective(const Candidate& cand) const {
    double total = 0.0;
    for (size_t seq = 0; seq < num_sequences(); ++seq) {
      double g = 1.0, u_sum = 0.0, log_ratio = 0.0;
      size_t prefix = 0;
      for (size_t t = 0; t < T; ++t) {
        const size_t x = (seq >> (T - 1 - t)) & 1;
        const double pc = cand[t][group_of[t][prefix] * 2 + x];
        const double pr = ref[t][prefix * 2 + x];
        const double g_factor = controlled[t] ? pc : pr;
        const double r_factor = controlled[t] ? pr : pc;
        g *= g_factor;
        if (g == 0.0) break;
        u_sum += util[t][prefix * 2 + x];
        if (r_factor == 0.0) return kNegInf;
        log_ratio += std::log2(g_factor / r_factor);
        prefix = prefix * 2 + x;
      }
      if (g == 0.0) continue;
      total += g * (u_sum - alpha * log_ratio);
    }
    return total;
  }

  prob::CausalModel reference_model() const {
    using namespace prob;
    Alphabet binary({"0", "1"});
    std::vector<VariableSpec> variables;
    std::vector<DistTable> tables;
    for (size_t t = 0; t < T; ++t) {
      variables.push_back({"x" + std::to_string(t + 1), binary,
                           observable[t] ? IoType::DisclosedInput : IoType::UndisclosedInput,
                           controlled[t] ? VpMode::Controlled : VpMode::Estimated});
      std::vector<std::vector<double>> rows(num_histories(t));
      for (size_t h = 0; h < rows.size(); ++h)
        rows[h] = {ref[t][h * 2], ref[t][h * 2 + 1]};
      tables.emplace_back(std::vector<size_t>(t, 2), 2, std::move(rows));
    }
    return CausalModel(std::move(variables), std::move(tables));
  }

  gvp::UtilityTable utility_table(const prob::CausalModel& shape) const {
    std::vector<std::vector<double>> blocks;
    for (size_t t = 0; t < T; ++t) blocks.push_back(util[t]);
    return gvp::UtilityTable(shape, blocks);
  }

  Candidate extract(const prob::CausalModel& model) const {
    Candidate cand(T);
    for (size_t t = 0; t < T; ++t) {
      cand[t].assign(num_groups[t] * 2, 0.0);
      for (size_t h = 0; h < num_histories(t); ++h) {
        cand[t][group_of[t][h] * 2] = model.conditional(t).prob(h, 0);
        cand[t][group_of[t][h] * 2 + 1] = model.conditional(t).prob(h, 1);
      }
    }
    return cand;
  }
};

GvpInstance random_gvp_instance(Rng& rng) {
  GvpInstance inst;
  inst.T = 2 + rng.uniform_below(2);  // T in 2..3
  inst.alpha = rng.uniform(0.25, 4.0);
  inst.controlled.resize(inst.T);
  inst.observable.resize(inst.T);
  const bool hidden_first = rng.uniform01() < 0.4;
  for (size_t t = 0; t < inst.T; ++t) {
    inst.controlled[t] = rng.uniform01() < 0.5;
    inst.observable[t] = true;
  }
  if (hidden_first) {
    inst.observable[0] = false;
    inst.controlled[0] = false;  // a hypothesis variable is estimated
  }
  for (size_t t = 0; t < inst.T; ++t) {
    const size_t nh = inst.num_histories(t);
    inst.ref.emplace_back(nh * 2);
    inst.util.emplace_back(nh * 2);
    for (size_t h = 0; h < nh; ++h) {
      std::vector<double> row = rng.simplex_point(2);
      for (double& v : row) v = 0.9 * v + 0.05;
      inst.ref[t][h * 2] = row[0];
      inst.ref[t][h * 2 + 1] = row[1];
      inst.util[t][h * 2] = rng.uniform(0.0, 2.0);
      inst.util[t][h * 2 + 1] = rng.uniform(0.0, 2.0);
    }
    // Visible grouping.
    inst.group_of.emplace_back(nh, 0);
    std::map<size_t, size_t> seen;
    for (size_t h = 0; h < nh; ++h) {
      size_t vis = 0;
      for (size_t s = 0; s < t; ++s) {
        const size_t digit = (h >> (t - 1 - s)) & 1;
        if (inst.observable[s]) vis = vis * 2 + digit;
      }
      auto [it, inserted] = seen.emplace(vis, seen.size());
      inst.group_of[t][h] = it->second;
    }
    inst.num_groups.push_back(seen.size());
  }
  return inst;
}

GvpInstance::Candidate random_candidate(const GvpInstance& inst, Rng& rng) {
  GvpInstance::Candidate cand(inst.T);
  for (size_t t = 0; t < inst.T; ++t) {
    cand[t].resize(inst.num_groups[t] * 2);
    for (size_t g = 0; g < inst.num_groups[t]; ++g) {
      const std::vector<double> row = rng.simplex_point(2);
      cand[t][g * 2] = row[0];
      cand[t][g * 2 + 1] = row[1];
    }
  }
  return cand;
}

std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
  return v;
}

// Projected coordinate ascent over the (variable, group) rows, using only
// the black-box objective. Independent of the solver's closed forms.
double coordinate_ascent(const GvpInstance& inst, GvpInstance::Candidate start) {
  GvpInstance::Candidate cand = std::move(start);
  double current = inst.objective(cand);
  const double eps = 1e-7;
  for (int pass = 0; pass < 400; ++pass) {
    const double before = current;
    for (size_t t = 0; t < inst.T; ++t) {
      for (size_t g = 0; g < inst.num_groups[t]; ++g) {
        double step = 0.25;
        for (int iter = 0; iter < 60; ++iter) {
          // Finite-difference gradient of the row.
          double grad[2];
          for (size_t x = 0; x < 2; ++x) {
            const double saved = cand[t][g * 2 + x];
            cand[t][g * 2 + x] = saved + eps;
            const double up = inst.objective(cand);
            cand[t][g * 2 + x] = std::max(saved - eps, 0.0);
            const double down = inst.objective(cand);
            cand[t][g * 2 + x] = saved;
            grad[x] = (up - down) / (2.0 * eps);
          }
          bool improved = false;
          while (step > 1e-9) {
            std::vector<double> row{cand[t][g * 2] + step * grad[0],
                                    cand[t][g * 2 + 1] + step * grad[1]};
            row = project_simplex(std::move(row));
            const double saved0 = cand[t][g * 2], saved1 = cand[t][g * 2 + 1];
            cand[t][g * 2] = row[0];
            cand[t][g * 2 + 1] = row[1];
            const double trial = inst.objective(cand);
            if (trial > current + 1e-14) {
              current = trial;
              improved = true;
              break;
            }
            cand[t][g * 2] = saved0;
            cand[t][g * 2 + 1] = saved1;
            step *= 0.5;
          }
          if (!improved) break;
        }
      }
    }
    if (current - before < 1e-10) break;
  }
  return current;
}

SuiteResult suite_gvp_oracle(const VerifyOptions& options) {
  Stopwatch watch;
  Rng rng = Rng(options.seed).child(5);
  const int instances = options.quick ? 4 : 20;
  const int candidates = options.quick ? 2000 : 100000;
  const int restarts = options.quick ? 1 : 3;

  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const GvpInstance inst = random_gvp_instance(rng);
    const prob::CausalModel reference = inst.reference_model();
    gvp::GvpProblem problem(reference, std::nullopt, inst.utility_table(reference),
                            Temperature(inst.alpha));
    const prob::CausalModel solved = gvp::gvp_solve(problem);
    const double solver_obj = gvp::gvp_objective_for(problem, solved);

    // The raw evaluator and the library objective must agree on the
    // solved candidate before it referees anything.
    const double raw_solver_obj = inst.objective(inst.extract(solved));
    worst = std::max(worst, std::abs(raw_solver_obj - solver_obj));

    double best_random = kNegInf;
    for (int c = 0; c < candidates; ++c)
      best_random = std::max(best_random, inst.objective(random_candidate(inst, rng)));
    worst = std::max(worst, best_random - solver_obj);

    double best_ascent = kNegInf;
    for (int r = 0; r < restarts; ++r) {
      GvpInstance::Candidate start =
          r == 0 ? inst.extract(reference) : random_candidate(inst, rng);
      best_ascent = std::max(best_ascent, coordinate_ascent(inst, std::move(start)));
    }
    worst = std::max(worst, best_ascent - solver_obj);
  }

  SuiteResult result;
  result.name = "gvp_oracle";
  result.max_violation = worst;
  result.tolerance = 1e-6;
  result.pass = worst < result.tolerance;
  result.wall_seconds = watch.seconds();
  result.detail = describe(worst, std::to_string(instances) + " instances, " +
                                      std::to_string(candidates) +
                                      " random candidates + coordinate ascent");
  return result;
}

// ---------------------------------------------------------------------------
// Suites 6 and 7: DP limit and temperature limits

solvers::ControlProblem random_control_problem(Rng& rng, size_t T, double min_gap) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::vector<double>> reference(T), environment(T), reward_action(T),
        reward_obs(T);
    for (size_t t = 0; t < T; ++t) {
      size_t nh = 1;
      for (size_t s = 0; s < t; ++s) nh *= 4;
      reference[t].resize(nh * 2);
      environment[t].resize(nh * 2 * 2);
      reward_action[t].resize(nh * 2);
      reward_obs[t].resize(nh * 2 * 2);
      for (size_t h = 0; h < nh; ++h) {
        const std::vector<double> r = rng.simplex_point(2);
        reference[t][h * 2] = 0.8 * r[0] + 0.1;  // keep the reference well inside
        reference[t][h * 2 + 1] = 1.0 - reference[t][h * 2];
        for (size_t a = 0; a < 2; ++a) {
          const std::vector<double> q = rng.simplex_point(2);
          environment[t][(h * 2 + a) * 2] = 0.9 * q[0] + 0.05;
          environment[t][(h * 2 + a) * 2 + 1] = 1.0 - environment[t][(h * 2 + a) * 2];
          reward_action[t][h * 2 + a] = rng.uniform(0.0, 1.0);
          for (size_t o = 0; o < 2; ++o)
            reward_obs[t][(h * 2 + a) * 2 + o] = rng.uniform(0.0, 1.0);
        }
      }
    }
    auto problem = solvers::ControlProblem::make(T, 2, 2, Temperature(1.0),
                                                 std::move(reference), std::move(environment),
                                                 std::move(reward_action),
                                                 std::move(reward_obs));
    // Accept only instances whose optimal action is unique by min_gap at
    // every history.
    double smallest_gap = kPosInf;
    std::vector<double> value_next;  // V0 at level t+1
    for (size_t t = T; t-- > 0;) {
      const size_t nh = problem.num_histories(t);
      std::vector<double> value(nh);
      for (size_t h = 0; h < nh; ++h) {
        double q[2];
        for (size_t a = 0; a < 2; ++a) {
          q[a] = problem.reward_action[t][h * 2 + a];
          for (size_t o = 0; o < 2; ++o)
            q[a] += problem.environment[t][(h * 2 + a) * 2 + o] *
                    (problem.reward_obs[t][(h * 2 + a) * 2 + o] +
                     (value_next.empty() ? 0.0 : value_next[(h * 2 + a) * 2 + o]));
        }
        smallest_gap = std::min(smallest_gap, std::abs(q[0] - q[1]));
        value[h] = std::max(q[0], q[1]);
      }
      value_next = std::move(value);
    }
    if (smallest_gap >= min_gap) return problem;
  }
  throw Error("could not sample a control problem with the requested reward gap");
}

// Exhaustive enumeration over deterministic policies; exact expected value.
double best_deterministic_value(const solvers::ControlProblem& problem) {
  const size_t T = problem.horizon;
  size_t total_slots = 0;  // one action choice per (level, history)
  for (size_t t = 0; t < T; ++t) total_slots += problem.num_histories(t);
  const size_t combos = size_t{1} << total_slots;  // binary actions
  double best = kNegInf;
  for (size_t mask = 0; mask < combos; ++mask) {
    std::vector<std::vector<double>> tables(T);
    size_t bit = 0;
    for (size_t t = 0; t < T; ++t) {
      const size_t nh = problem.num_histories(t);
      tables[t].assign(nh * 2, 0.0);
      for (size_t h = 0; h < nh; ++h) {
        const size_t a = (mask >> bit) & 1;
        tables[t][h * 2 + a] = 1.0;
        ++bit;
      }
    }
    best = std::max(best, solvers::policy_expected_reward(problem, tables));
  }
  return best;
}

SuiteResult suite_dp_limit(const VerifyOptions& options) {
  Stopwatch watch;
  Rng rng = Rng(options.seed).child(6);
  const int problems = options.quick ? 3 : 10;

  double worst = 0.0;
  bool argmax_ok = true;
  for (int i = 0; i < problems; ++i) {
    const auto problem = random_control_problem(rng, 2, 0.1);
    const solvers::DpSolution dp = solvers::dp_limit(problem);

    // dp value vs exhaustive policy enumeration.
    worst = std::max(worst, std::abs(dp.value[0][0] - best_deterministic_value(problem)));

    // dp's own one-hot policy must attain its value.
    std::vector<std::vector<double>> dp_tables(problem.horizon);
    for (size_t t = 0; t < problem.horizon; ++t) {
      dp_tables[t].assign(problem.num_histories(t) * 2, 0.0);
      for (size_t h = 0; h < problem.num_histories(t); ++h)
        dp_tables[t][h * 2 + dp.action[t][h]] = 1.0;
    }
    worst = std::max(worst,
                     std::abs(dp.value[0][0] - solvers::policy_expected_reward(problem,
                                                                               dp_tables)));

    // Soft policy at alpha = 1e-3: per-history argmax equals the dp action.
    const auto policy = solvers::solve_optimal_control(problem, Temperature(1e-3));
    for (size_t t = 0; t < problem.horizon; ++t)
      for (size_t h = 0; h < problem.num_histories(t); ++h) {
        const auto row = policy.action_row(t, h);
        const size_t argmax = row[0] >= row[1] ? 0 : 1;
        if (argmax != dp.action[t][h]) argmax_ok = false;
      }
  }

  SuiteResult result;
  result.name = "dp_limit";
  result.max_violation = worst;
  result.tolerance = 1e-9;
  result.pass = worst < result.tolerance && argmax_ok;
  result.wall_seconds = watch.seconds();
  result.detail = describe(worst, argmax_ok ? "soft argmax matches dp everywhere"
                                            : "soft argmax DIVERGES from dp");
  return result;
}

SuiteResult suite_temperature_limits(const VerifyOptions& options) {
  Stopwatch watch;
  Rng rng = Rng(options.seed).child(7);
  const int problems = options.quick ? 3 : 10;

  double worst = 0.0;
  for (int i = 0; i < problems; ++i) {
    const auto problem = random_control_problem(rng, 2, 0.1);
    const solvers::DpSolution dp = solvers::dp_limit(problem);

    const auto hot = solvers::solve_optimal_control(problem, Temperature(1e6));
    const auto cold = solvers::solve_optimal_control(problem, Temperature(1e-6));
    for (size_t t = 0; t < problem.horizon; ++t)
      for (size_t h = 0; h < problem.num_histories(t); ++h) {
        const auto hot_row = hot.action_row(t, h);
        const std::span<const double> ref_row{problem.reference[t].data() + h * 2, 2};
        worst = std::max(worst, tv_distance(hot_row, ref_row));

        const auto cold_row = cold.action_row(t, h);
        std::vector<double> one_hot(2, 0.0);
        one_hot[dp.action[t][h]] = 1.0;
        worst = std::max(worst, tv_distance(cold_row, one_hot));
      }
  }

  SuiteResult result;
  result.name = "temperature_limits";
  result.max_violation = worst;
  result.tolerance = 1e-3;
  result.pass = worst < result.tolerance;
  result.wall_seconds = watch.seconds();
  result.detail = describe(worst, "TV against reference at alpha=1e6 and dp one-hot at 1e-6");
  return result;
}

// ---------------------------------------------------------------------------
// Suite 8: adaptive estimation

SuiteResult suite_adaptive_estimation(const VerifyOptions& options) {
  Stopwatch watch;
  Rng rng = Rng(options.seed).child(8);
  const int models = options.quick ? 2 : 6;
  const size_t horizon = 6;

  double seq_batch = 0.0, martingale = 0.0;
  for (int i = 0; i < models; ++i) {
    const size_t K = 2 + rng.uniform_below(3);  // 2..4 parameters
    // History-dependent sources: dense random rows per (theta, level, rank).
    auto tables = std::make_shared<std::vector<std::vector<std::vector<double>>>>();
    tables->resize(K);
    for (size_t k = 0; k < K; ++k) {
      (*tables)[k].resize(horizon);
      for (size_t level = 0; level < horizon; ++level) {
        const size_t ranks = size_t{1} << level;
        (*tables)[k][level].resize(ranks * 2);
        for (size_t r = 0; r < ranks; ++r) {
          std::vector<double> row = rng.simplex_point(2);
          for (double& v : row) v = 0.9 * v + 0.05;
          (*tables)[k][level][r * 2] = row[0];
          (*tables)[k][level][r * 2 + 1] = row[1];
        }
      }
    }
    solvers::EstimationProblem problem;
    problem.prior = rng.simplex_point(K);
    for (double& v : problem.prior) v = 0.9 * v + 0.1 / K;
    double s = sum(problem.prior);
    for (double& v : problem.prior) v /= s;
    problem.num_symbols = 2;
    problem.horizon = horizon;
    problem.likelihood = [tables](size_t theta, std::span<const size_t> history) {
      size_t rank = 0;
      for (size_t v : history) rank = rank * 2 + v;
      const auto& level = (*tables)[theta][history.size()];
      return std::vector<double>{level[rank * 2], level[rank * 2 + 1]};
    };

    // Sequential vs batch along every history of full length.
    for (size_t seq = 0; seq < (size_t{1} << horizon); ++seq) {
      solvers::PredictiveTracker tracker(problem);
      std::vector<size_t> prefix;
      for (size_t n = 0; n < horizon; ++n) {
        const auto batch = solvers::predictive_update(problem, prefix);
        const auto predictive = tracker.predictive();
        for (size_t k = 0; k < K; ++k)
          seq_batch = std::max(seq_batch,
                               std::abs(batch.posterior[k] - tracker.posterior()[k]));
        for (size_t o = 0; o < 2; ++o)
          seq_batch = std::max(seq_batch, std::abs(batch.predictive[o] - predictive[o]));
        const size_t symbol = (seq >> (horizon - 1 - n)) & 1;
        tracker.observe(symbol);
        prefix.push_back(symbol);
      }
    }

    // Martingale: the mixture-averaged posterior equals the prior at
    // every depth, by exact enumeration.
    for (size_t n = 1; n <= horizon; ++n) {
      std::vector<double> averaged(K, 0.0);
      for (size_t seq = 0; seq < (size_t{1} << n); ++seq) {
        std::vector<size_t> history(n);
        for (size_t j = 0; j < n; ++j) history[j] = (seq >> (n - 1 - j)) & 1;
        // Mixture probability of the history.
        std::vector<double> w = problem.prior;
        std::vector<size_t> prefix;
        for (size_t j = 0; j < n; ++j) {
          for (size_t k = 0; k < K; ++k) w[k] *= problem.likelihood(k, prefix)[history[j]];
          prefix.push_back(history[j]);
        }
        // w[k] = mixture probability of the history times the posterior.
        for (size_t k = 0; k < K; ++k) averaged[k] += w[k];
      }
      for (size_t k = 0; k < K; ++k)
        martingale = std::max(martingale, std::abs(averaged[k] - problem.prior[k]));
    }
  }

  SuiteResult result;
  result.name = "adaptive_estimation";
  result.max_violation = std::max(seq_batch, martingale);
  result.tolerance = 1e-9;
  result.pass = seq_batch < 1e-12 && martingale < 1e-9;
  result.wall_seconds = watch.seconds();
  std::ostringstream detail;
  detail << "sequential-vs-batch " << seq_batch << " (tol 1e-12); martingale " << martingale
         << " (tol 1e-9)";
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// Suite 9: Bayesian control rule on the bandit

SuiteResult suite_bcr_bandit(const VerifyOptions& options) {
  Stopwatch watch;
  const int seeds = options.quick ? 20 : 100;
  const size_t horizon = options.quick ? 300 : 1000;
  const size_t window = 100;
  const size_t concentrate_step = options.quick ? 100 : 200;

  const std::vector<std::vector<double>> means{{0.8, 0.2}, {0.2, 0.8}};
  const envs::Environment env = envs::make_bernoulli_bandit(means, {0.5, 0.5});
  const auto agent = envs::agent_for_environment(env, envs::greedy_bandit_controllers(means));

  int concentrated = 0;
  double window_regret_sum = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto record = envs::run_interaction(agent, env, horizon, 1000 + s);
    if (record.steps[concentrate_step - 1].posterior[record.true_param] > 0.95) ++concentrated;
    double achieved = 0.0;
    for (size_t t = horizon - window; t < horizon; ++t) achieved += record.steps[t].reward;
    window_regret_sum += (0.8 * window - achieved) / window;
  }
  const double mean_window_regret = window_regret_sum / seeds;
  const int required = options.quick ? seeds * 9 / 10 : 95;

  SuiteResult result;
  result.name = "bcr_bandit";
  result.max_violation = mean_window_regret;
  result.tolerance = 0.05;
  result.pass = concentrated >= required && mean_window_regret < 0.05;
  result.wall_seconds = watch.seconds();
  std::ostringstream detail;
  detail << concentrated << "/" << seeds << " runs concentrated by step " << concentrate_step
         << " (need " << required << "); mean per-step regret over the last " << window
         << " steps " << mean_window_regret;
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// Suite 10: reproducibility

SuiteResult suite_reproducibility(const VerifyOptions& options) {
  Stopwatch watch;

  const std::string bcr_text =
      "config_version = 1\n"
      "kind = bcr\n"
      "id = repro_bcr\n"
      "horizon = 50\n"
      "seeds = 1..5\n"
      "[bcr]\n"
      "environment = bandit\n"
      "[bandit]\n"
      "means = 0.8, 0.2\n"
      "means = 0.2, 0.8\n";
  const std::string control_text =
      "config_version = 1\n"
      "kind = control\n"
      "id = repro_control\n"
      "horizon = 2\n"
      "alpha = 0.1, 1, 10\n"
      "[alphabet.acts]\n"
      "symbols = l, r\n"
      "[alphabet.obs]\n"
      "symbols = lo, hi\n"
      "[control]\n"
      "actions = acts\n"
      "observations = obs\n"
      "[reference]\n"
      "default = 0.5, 0.5\n"
      "[environment]\n"
      "default = 0.3, 0.7\n"
      "row = l : 0.9, 0.1\n"
      "[reward.action]\n"
      "default = 0, 0.25\n"
      "[reward.observation]\n"
      "default = 0, 1\n";

  bool identical = true;
  for (const std::string& text : {bcr_text, control_text}) {
    std::string first, second;
    for (int round = 0; round < 2; ++round) {
      const auto cfg = config::parse_config_text(text, "repro");
      const auto output = runner::run_experiment(cfg);
      const std::string csv = runner::render_csv(output.rows, cfg.log_base);
      (round == 0 ? first : second) = csv;
    }
    if (first != second || first.empty()) identical = false;
  }

  SuiteResult result;
  result.name = "reproducibility";
  result.max_violation = identical ? 0.0 : 1.0;
  result.tolerance = 0.0;
  result.pass = identical;
  result.wall_seconds = watch.seconds();
  result.detail = identical ? "re-rendered CSV is byte-identical"
                            : "CSV differs between identical runs";
  (void)options;
  return result;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{
      "conjugacy_roundtrip", "variational_maximum", "control_closed_form",
      "intervention_semantics", "gvp_oracle",       "dp_limit",
      "temperature_limits",   "adaptive_estimation", "bcr_bandit",
      "reproducibility"};
  return names;
}

std::vector<SuiteResult> run_suites(const VerifyOptions& options,
                                    const std::vector<std::string>& selection) {
  using SuiteFn = SuiteResult (*)(const VerifyOptions&);
  static const std::map<std::string, SuiteFn> registry{
      {"conjugacy_roundtrip", suite_conjugacy_roundtrip},
      {"variational_maximum", suite_variational_maximum},
      {"control_closed_form", suite_control_closed_form},
      {"intervention_semantics", suite_intervention_semantics},
      {"gvp_oracle", suite_gvp_oracle},
      {"dp_limit", suite_dp_limit},
      {"temperature_limits", suite_temperature_limits},
      {"adaptive_estimation", suite_adaptive_estimation},
      {"bcr_bandit", suite_bcr_bandit},
      {"reproducibility", suite_reproducibility},
  };

  std::vector<std::string> names = selection.empty() ? suite_names() : selection;
  for (const auto& name : names)
    if (!registry.count(name)) throw ValidationError("unknown verify suite '" + name + "'");

  std::vector<SuiteResult> results;
  for (const auto& name : names) results.push_back(registry.at(name)(options));
  return results;
}

}  // namespace braid::verify
