#pragma once

// Sequence-level variational principle over typed causal models.
//
// Given a reference model R and a candidate p sharing its variable
// structure, two auxiliary measures are built factor by factor: G takes
// the candidate's conditional on controlled variables and the reference's
// on estimated ones; R swaps the roles. The objective
//
//   J(p) = sum_seq G(seq) U*(seq) - alpha * sum_seq G(seq) log2 G(seq)/R(seq)
//
// is the free-utility difference of the transformation, with U*(seq) the
// per-step sum of target utilities. gvp_solve maximizes J by backward
// sweeps: controlled variables take the soft-max closed form, estimated
// variables the minimum-relative-entropy predictive form. Candidate
// conditionals may depend only on observable coordinates of the history;
// hidden (undisclosed-input) coordinates are marginalized under G.

#include <optional>
#include <utility>
#include <vector>

#include "braid/conjugate.hpp"
#include "braid/prob.hpp"

namespace braid::gvp {

using conjugate::Temperature;
using prob::CausalModel;

// Per-variable target utilities U*(x_t | x_<t), dense over histories like
// a DistTable but with finite real values (rewards, not log-probabilities).
class UtilityTable {
 public:
  // values[t] has model.num_histories(t) * arity(t) entries, row-major.
  UtilityTable(const CausalModel& shape, std::vector<std::vector<double>> values);

  static UtilityTable zeros(const CausalModel& shape);

  double value(size_t t, size_t history_rank, size_t symbol) const;
  size_t num_variables() const { return arity_.size(); }

  bool matches(const CausalModel& shape) const;

 private:
  std::vector<std::vector<double>> values_;
  std::vector<size_t> arity_;
};

struct GvpProblem {
  CausalModel reference;
  std::optional<CausalModel> candidate;  // empty for gvp_solve
  UtilityTable target_utility;
  Temperature alpha;

  GvpProblem(CausalModel ref, std::optional<CausalModel> cand, UtilityTable util,
             Temperature a);
};

// The auxiliary pair (G, R) as explicit causal models.
std::pair<CausalModel, CausalModel> build_auxiliary(const GvpProblem& problem);

// Exact objective by sequence enumeration; -inf when G is not absolutely
// continuous w.r.t. R. Requires a candidate.
double gvp_objective(const GvpProblem& problem);

struct GvpObjectiveParts {
  double expected_utility;  // sum_seq G(seq) U*(seq)
  double kl_bits;           // sum_seq G(seq) log2 G(seq)/R(seq)
  double objective;         // expected_utility - alpha * kl_bits
};

GvpObjectiveParts gvp_objective_parts(const GvpProblem& problem, const CausalModel& candidate);

// Convenience: objective of an explicit candidate against the problem's
// reference and utility.
double gvp_objective_for(const GvpProblem& problem, const CausalModel& candidate);

// Maximizes the objective over candidates whose conditionals depend only
// on observable history coordinates. Backward sweeps are repeated until
// the objective stops improving; one sweep is exact when no controlled
// variable sits upstream of an estimated one with hidden parents.
// Histories carrying zero weight are assigned the reference conditional.
CausalModel gvp_solve(const GvpProblem& problem);

}  // namespace braid::gvp
