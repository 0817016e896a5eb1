#pragma once

// Finite probability spaces over causally ordered, typed random variables.
//
// A CausalModel is an ordered list of conditional distribution tables, one
// per variable, each conditioned on all preceding variables. The joint
// measure is the product of the tables. Histories are stored dense: the
// table for variable t has one row per assignment of variables 0..t-1,
// ranked lexicographically. This is exponential in the number of variables
// and intentionally so; everything here is exact desk-scale machinery.
//
// Three belief-update semantics operate on models:
//   condition  - a measurement; reweights the whole joint (past included),
//   intervene  - a decision; pins the present, leaves past untouched,
//   obs        - maps a realized history to the typed update sequence an
//                agent actually performs, given which variables it can see.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "braid/errors.hpp"
#include "braid/numeric.hpp"

namespace braid::prob {

class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> symbols);

  size_t size() const { return symbols_.size(); }
  const std::string& label(size_t i) const;
  std::optional<size_t> index(std::string_view label) const;

  bool operator==(const Alphabet& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
};

// How a variable's value travels between the two interacting systems,
// seen from the modeled agent's side. Undisclosed inputs are latent:
// the agent never observes them.
enum class IoType { Output, DisclosedInput, UndisclosedInput };

// Which side of the sequence-level variational split the variable sits on.
// Consulted only by the gvp module.
enum class VpMode { Controlled, Estimated };

struct VariableSpec {
  std::string name;
  Alphabet alphabet;
  IoType io_type = IoType::DisclosedInput;
  VpMode vp_mode = VpMode::Estimated;

  bool observable() const { return io_type != IoType::UndisclosedInput; }
};

// Symbol indices of already-realized variables, one per variable from the
// front of the causal order. Empty history is the root.
class History {
 public:
  History() = default;
  explicit History(std::vector<size_t> values) : values_(std::move(values)) {}

  size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  size_t operator[](size_t i) const { return values_[i]; }
  std::span<const size_t> values() const { return values_; }

  History extended(size_t value) const {
    std::vector<size_t> v = values_;
    v.push_back(value);
    return History(std::move(v));
  }

  bool operator==(const History& other) const = default;

 private:
  std::vector<size_t> values_;
};

// Dense conditional table P(X_t | X_<t). Rows are indexed by the
// lexicographic rank of the conditioning history.
class DistTable {
 public:
  // radices: alphabet sizes of the preceding variables, in causal order.
  // rows: one probability vector per history, lexicographic order.
  DistTable(std::vector<size_t> radices, size_t arity, std::vector<std::vector<double>> rows);

  // Same row everywhere (history-independent conditional).
  static DistTable constant(std::vector<size_t> radices, std::vector<double> row);

  size_t arity() const { return arity_; }
  size_t num_histories() const { return num_histories_; }
  const std::vector<size_t>& radices() const { return radices_; }

  std::span<const double> row(size_t history_rank) const;
  std::span<const double> row(const History& h) const { return row(rank_of(h)); }
  double prob(size_t history_rank, size_t symbol) const;
  double log_prob(size_t history_rank, size_t symbol) const {
    return log2_safe(prob(history_rank, symbol));
  }

  size_t rank_of(const History& h) const;

 private:
  std::vector<size_t> radices_;
  size_t arity_ = 0;
  size_t num_histories_ = 0;
  std::vector<double> probs_;  // num_histories_ x arity_, row-major
};

// The kind of belief update a realized value triggers for the agent.
enum class UpdateKind { Causal, Logical };

struct ObsStep {
  size_t variable;
  size_t value;
  UpdateKind kind;

  bool operator==(const ObsStep&) const = default;
};

class CausalModel {
 public:
  CausalModel(std::vector<VariableSpec> variables, std::vector<DistTable> conditionals);

  size_t num_variables() const { return variables_.size(); }
  const VariableSpec& variable(size_t t) const { return variables_[t]; }
  const std::vector<VariableSpec>& variables() const { return variables_; }
  const DistTable& conditional(size_t t) const { return conditionals_[t]; }

  // Number of distinct histories over variables 0..t-1.
  size_t num_histories(size_t t) const;
  // Number of full-length sequences.
  size_t num_sequences() const { return num_histories(num_variables()); }

  size_t rank_of(const History& h) const;
  History history_of(size_t rank, size_t length) const;

  // Walks every full sequence in lexicographic order.
  void for_each_sequence(const std::function<void(const History&, double)>& fn) const;

  // Dense joint over full sequences, lexicographic order.
  std::vector<double> joint() const;

  bool same_structure(const CausalModel& other) const;

 private:
  std::vector<VariableSpec> variables_;
  std::vector<DistTable> conditionals_;
};

// prod_t P(x_t | x_<t) for a full-length sequence.
double joint_probability(const CausalModel& model, const History& seq);
double log_joint_probability(const CausalModel& model, const History& seq);

// Exact marginal of variable t by enumeration.
std::vector<double> marginal(const CausalModel& model, size_t t);

// Measurement: returns the model whose joint is P(. | X_t = value).
// The joint is materialized, restricted, renormalized, and refactorized
// into causal order. Rows unreachable after conditioning keep the original
// model's conditional (they carry zero probability).
CausalModel condition(const CausalModel& model, size_t t, size_t value);

// Decision: returns the model with variable t pinned to `value` and
// rendered independent of its past. Past conditionals and future
// conditionals are untouched; only table t becomes a point mass.
CausalModel intervene(const CausalModel& model, size_t t, size_t value);

// The typed update sequence the agent performs after seeing `realized`:
// outputs become causal updates, disclosed inputs logical updates, and
// undisclosed inputs are dropped. Depends only on types and values.
std::vector<ObsStep> obs(const CausalModel& model, const History& realized);

// Derives the I/O system B from a model of beliefs:
//   B(x_t | x_<t) = P(x_t | obs(x_<t))
// with causal flags resolved through intervene and logical flags through
// condition. The result has the same variables, all conditioned on plain
// histories. Rows whose obs-history is unreachable fall back to the
// original plain conditional; they carry zero weight under B.
CausalModel behavior_from_beliefs(const CausalModel& model);

}  // namespace braid::prob
