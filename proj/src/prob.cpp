#include "braid/prob.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace braid::prob {

namespace {

constexpr double kRowSumTolerance = 1e-9;  // renormalize within this, reject beyond

std::string format_row_error(size_t rank, double sum) {
  std::ostringstream os;
  os << "distribution row " << rank << " sums to " << sum << ", expected 1 within "
     << kRowSumTolerance;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Alphabet

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw ValidationError("alphabet must have at least one symbol");
  for (size_t i = 0; i < symbols_.size(); ++i)
    for (size_t j = i + 1; j < symbols_.size(); ++j)
      if (symbols_[i] == symbols_[j])
        throw ValidationError("alphabet symbol '" + symbols_[i] + "' is duplicated");
}

const std::string& Alphabet::label(size_t i) const {
  if (i >= symbols_.size()) throw ValidationError("alphabet index out of range");
  return symbols_[i];
}

std::optional<size_t> Alphabet::index(std::string_view label) const {
  for (size_t i = 0; i < symbols_.size(); ++i)
    if (symbols_[i] == label) return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// DistTable

DistTable::DistTable(std::vector<size_t> radices, size_t arity,
                     std::vector<std::vector<double>> rows)
    : radices_(std::move(radices)), arity_(arity) {
  if (arity_ == 0) throw ValidationError("conditional table needs a nonempty alphabet");
  num_histories_ = 1;
  for (size_t r : radices_) {
    if (r == 0) throw ValidationError("history radix of zero");
    num_histories_ *= r;
  }
  if (rows.size() != num_histories_) {
    std::ostringstream os;
    os << "conditional table has " << rows.size() << " rows, expected " << num_histories_;
    throw ValidationError(os.str());
  }
  probs_.resize(num_histories_ * arity_);
  for (size_t h = 0; h < num_histories_; ++h) {
    const auto& row = rows[h];
    if (row.size() != arity_) throw ValidationError("row arity mismatch");
    double s = 0.0;
    for (double p : row) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw ValidationError("probabilities must be finite and nonnegative");
      s += p;
    }
    if (std::abs(s - 1.0) > kRowSumTolerance) throw ValidationError(format_row_error(h, s));
    for (size_t x = 0; x < arity_; ++x) probs_[h * arity_ + x] = row[x] / s;
  }
}

DistTable DistTable::constant(std::vector<size_t> radices, std::vector<double> row) {
  size_t n = 1;
  for (size_t r : radices) n *= r;
  return DistTable(std::move(radices), row.size(), std::vector<std::vector<double>>(n, row));
}

std::span<const double> DistTable::row(size_t history_rank) const {
  if (history_rank >= num_histories_) throw ValidationError("history rank out of range");
  return {probs_.data() + history_rank * arity_, arity_};
}

double DistTable::prob(size_t history_rank, size_t symbol) const {
  if (symbol >= arity_) throw ValidationError("symbol index out of range");
  return row(history_rank)[symbol];
}

size_t DistTable::rank_of(const History& h) const {
  if (h.size() != radices_.size())
    throw ValidationError("history length does not match the conditioning depth");
  size_t rank = 0;
  for (size_t i = 0; i < radices_.size(); ++i) {
    if (h[i] >= radices_[i]) throw ValidationError("history value out of alphabet range");
    rank = rank * radices_[i] + h[i];
  }
  return rank;
}

// ---------------------------------------------------------------------------
// CausalModel

CausalModel::CausalModel(std::vector<VariableSpec> variables, std::vector<DistTable> conditionals)
    : variables_(std::move(variables)), conditionals_(std::move(conditionals)) {
  if (variables_.size() != conditionals_.size())
    throw ValidationError("one conditional table per variable required");
  for (size_t t = 0; t < variables_.size(); ++t) {
    const auto& table = conditionals_[t];
    if (table.arity() != variables_[t].alphabet.size())
      throw ValidationError("table arity does not match alphabet of variable '" +
                            variables_[t].name + "'");
    if (table.radices().size() != t)
      throw ValidationError("table for variable '" + variables_[t].name +
                            "' must condition on exactly the preceding variables");
    for (size_t s = 0; s < t; ++s)
      if (table.radices()[s] != variables_[s].alphabet.size())
        throw ValidationError("conditioning radix mismatch for variable '" + variables_[t].name +
                              "'");
  }
}

size_t CausalModel::num_histories(size_t t) const {
  size_t n = 1;
  for (size_t s = 0; s < t; ++s) n *= variables_[s].alphabet.size();
  return n;
}

size_t CausalModel::rank_of(const History& h) const {
  size_t rank = 0;
  for (size_t i = 0; i < h.size(); ++i) {
    if (h[i] >= variables_[i].alphabet.size())
      throw ValidationError("history value out of alphabet range");
    rank = rank * variables_[i].alphabet.size() + h[i];
  }
  return rank;
}

History CausalModel::history_of(size_t rank, size_t length) const {
  std::vector<size_t> vals(length);
  for (size_t i = length; i-- > 0;) {
    const size_t radix = variables_[i].alphabet.size();
    vals[i] = rank % radix;
    rank /= radix;
  }
  return History(std::move(vals));
}

void CausalModel::for_each_sequence(const std::function<void(const History&, double)>& fn) const {
  const size_t n = num_sequences();
  for (size_t rank = 0; rank < n; ++rank) {
    History seq = history_of(rank, num_variables());
    fn(seq, joint_probability(*this, seq));
  }
}

std::vector<double> CausalModel::joint() const {
  // Forward pass over prefixes; avoids recomputing products per sequence.
  std::vector<double> weights{1.0};
  for (size_t t = 0; t < num_variables(); ++t) {
    const auto& table = conditionals_[t];
    std::vector<double> next(weights.size() * table.arity());
    for (size_t h = 0; h < weights.size(); ++h)
      for (size_t x = 0; x < table.arity(); ++x)
        next[h * table.arity() + x] = weights[h] * table.prob(h, x);
    weights = std::move(next);
  }
  return weights;
}

bool CausalModel::same_structure(const CausalModel& other) const {
  if (num_variables() != other.num_variables()) return false;
  for (size_t t = 0; t < num_variables(); ++t) {
    const auto& a = variables_[t];
    const auto& b = other.variables_[t];
    if (!(a.alphabet == b.alphabet) || a.io_type != b.io_type || a.vp_mode != b.vp_mode)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Operations

double joint_probability(const CausalModel& model, const History& seq) {
  if (seq.size() != model.num_variables())
    throw ValidationError("sequence must assign every variable");
  double p = 1.0;
  size_t prefix_rank = 0;
  for (size_t t = 0; t < seq.size(); ++t) {
    const size_t radix = model.variable(t).alphabet.size();
    if (seq[t] >= radix) throw ValidationError("sequence value out of alphabet range");
    p *= model.conditional(t).prob(prefix_rank, seq[t]);
    prefix_rank = prefix_rank * radix + seq[t];
  }
  return p;
}

double log_joint_probability(const CausalModel& model, const History& seq) {
  if (seq.size() != model.num_variables())
    throw ValidationError("sequence must assign every variable");
  double lp = 0.0;
  size_t prefix_rank = 0;
  for (size_t t = 0; t < seq.size(); ++t) {
    const size_t radix = model.variable(t).alphabet.size();
    if (seq[t] >= radix) throw ValidationError("sequence value out of alphabet range");
    lp += model.conditional(t).log_prob(prefix_rank, seq[t]);
    prefix_rank = prefix_rank * radix + seq[t];
  }
  return lp;
}

std::vector<double> marginal(const CausalModel& model, size_t t) {
  if (t >= model.num_variables()) throw ValidationError("variable index out of range");
  // Prefix weights up to t, then one application of table t.
  std::vector<double> weights{1.0};
  for (size_t s = 0; s < t; ++s) {
    const auto& table = model.conditional(s);
    std::vector<double> next(weights.size() * table.arity());
    for (size_t h = 0; h < weights.size(); ++h)
      for (size_t x = 0; x < table.arity(); ++x)
        next[h * table.arity() + x] = weights[h] * table.prob(h, x);
    weights = std::move(next);
  }
  const auto& table = model.conditional(t);
  std::vector<double> out(table.arity(), 0.0);
  for (size_t h = 0; h < weights.size(); ++h)
    for (size_t x = 0; x < table.arity(); ++x) out[x] += weights[h] * table.prob(h, x);
  return out;
}

namespace {

// Refactorizes a dense joint (lexicographic over full sequences) into causal
// order. Rows with zero prefix mass take the fallback model's conditional.
CausalModel refactorize(const CausalModel& fallback, const std::vector<double>& joint) {
  const size_t T = fallback.num_variables();
  std::vector<DistTable> tables;
  tables.reserve(T);

  size_t level_size = 1;
  for (size_t t = 0; t < T; ++t) {
    const size_t radix = fallback.variable(t).alphabet.size();
    const size_t tail = joint.size() / (level_size * radix);
    std::vector<double> child_mass(level_size * radix, 0.0);
    for (size_t h = 0; h < level_size; ++h)
      for (size_t x = 0; x < radix; ++x) {
        double m = 0.0;
        const size_t base = (h * radix + x) * tail;
        for (size_t k = 0; k < tail; ++k) m += joint[base + k];
        child_mass[h * radix + x] = m;
      }
    std::vector<std::vector<double>> rows(level_size);
    for (size_t h = 0; h < level_size; ++h) {
      double denom = 0.0;
      for (size_t x = 0; x < radix; ++x) denom += child_mass[h * radix + x];
      if (denom > 0.0) {
        rows[h].resize(radix);
        for (size_t x = 0; x < radix; ++x) rows[h][x] = child_mass[h * radix + x] / denom;
      } else {
        auto fb = fallback.conditional(t).row(h);
        rows[h].assign(fb.begin(), fb.end());
      }
    }
    std::vector<size_t> radices;
    for (size_t s = 0; s < t; ++s) radices.push_back(fallback.variable(s).alphabet.size());
    tables.emplace_back(std::move(radices), radix, std::move(rows));
    level_size *= radix;
  }
  return CausalModel(fallback.variables(), std::move(tables));
}

}  // namespace

CausalModel condition(const CausalModel& model, size_t t, size_t value) {
  if (t >= model.num_variables()) throw ValidationError("variable index out of range");
  if (value >= model.variable(t).alphabet.size())
    throw ValidationError("conditioning value out of alphabet range");

  std::vector<double> joint = model.joint();
  // Zero out sequences incompatible with X_t = value.
  const size_t T = model.num_variables();
  size_t tail = 1;
  for (size_t s = t + 1; s < T; ++s) tail *= model.variable(s).alphabet.size();
  const size_t radix = model.variable(t).alphabet.size();
  double mass = 0.0;
  for (size_t i = 0; i < joint.size(); ++i) {
    const size_t sym = (i / tail) % radix;
    if (sym != value)
      joint[i] = 0.0;
    else
      mass += joint[i];
  }
  if (mass <= 0.0)
    throw ZeroProbabilityError("conditioning event {" + model.variable(t).name + " = " +
                               model.variable(t).alphabet.label(value) +
                               "} has probability zero");
  for (double& p : joint) p /= mass;
  return refactorize(model, joint);
}

CausalModel intervene(const CausalModel& model, size_t t, size_t value) {
  if (t >= model.num_variables()) throw ValidationError("variable index out of range");
  const size_t radix = model.variable(t).alphabet.size();
  if (value >= radix) throw ValidationError("intervention value out of alphabet range");

  std::vector<double> delta(radix, 0.0);
  delta[value] = 1.0;
  std::vector<size_t> radices;
  for (size_t s = 0; s < t; ++s) radices.push_back(model.variable(s).alphabet.size());

  std::vector<DistTable> tables;
  tables.reserve(model.num_variables());
  for (size_t s = 0; s < model.num_variables(); ++s) {
    if (s == t)
      tables.push_back(DistTable::constant(radices, delta));
    else
      tables.push_back(model.conditional(s));
  }
  return CausalModel(model.variables(), std::move(tables));
}

std::vector<ObsStep> obs(const CausalModel& model, const History& realized) {
  if (realized.size() > model.num_variables())
    throw ValidationError("realized history longer than the variable list");
  std::vector<ObsStep> record;
  for (size_t t = 0; t < realized.size(); ++t) {
    const auto& var = model.variable(t);
    if (realized[t] >= var.alphabet.size())
      throw ValidationError("realized value out of alphabet range");
    switch (var.io_type) {
      case IoType::Output:
        record.push_back({t, realized[t], UpdateKind::Causal});
        break;
      case IoType::DisclosedInput:
        record.push_back({t, realized[t], UpdateKind::Logical});
        break;
      case IoType::UndisclosedInput:
        break;  // never observed, no update
    }
  }
  return record;
}

CausalModel behavior_from_beliefs(const CausalModel& model) {
  const size_t T = model.num_variables();

  // Updated models are memoized per obs signature: histories that differ
  // only in undisclosed coordinates share the same update sequence.
  auto key_of = [](const std::vector<ObsStep>& sig) {
    std::vector<size_t> key;
    key.reserve(sig.size() * 3);
    for (const auto& s : sig) {
      key.push_back(s.variable);
      key.push_back(s.value);
      key.push_back(s.kind == UpdateKind::Causal ? 1 : 0);
    }
    return key;
  };
  std::map<std::vector<size_t>, CausalModel> updated;
  updated.emplace(std::vector<size_t>{}, model);

  std::vector<DistTable> tables;
  tables.reserve(T);
  for (size_t t = 0; t < T; ++t) {
    const size_t nh = model.num_histories(t);
    const size_t arity = model.variable(t).alphabet.size();
    std::vector<std::vector<double>> rows(nh);
    for (size_t h = 0; h < nh; ++h) {
      const History hist = model.history_of(h, t);
      const std::vector<ObsStep> sig = obs(model, hist);
      auto it = updated.find(key_of(sig));
      if (it == updated.end()) {
        CausalModel m = model;
        bool dead = false;
        for (const auto& step : sig) {
          if (step.kind == UpdateKind::Causal) {
            m = intervene(m, step.variable, step.value);
          } else {
            if (marginal(m, step.variable)[step.value] <= 0.0) {
              dead = true;
              break;
            }
            m = condition(m, step.variable, step.value);
          }
        }
        if (dead) {
          // Unreachable under B; keep the plain conditional, zero weight.
          auto fb = model.conditional(t).row(h);
          rows[h].assign(fb.begin(), fb.end());
          continue;
        }
        it = updated.emplace(key_of(sig), std::move(m)).first;
      }
      rows[h] = marginal(it->second, t);
    }
    std::vector<size_t> radices;
    for (size_t s = 0; s < t; ++s) radices.push_back(model.variable(s).alphabet.size());
    tables.emplace_back(std::move(radices), arity, std::move(rows));
  }
  return CausalModel(model.variables(), std::move(tables));
}

}  // namespace braid::prob
