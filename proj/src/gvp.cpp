#include "braid/gvp.hpp"

#include <algorithm>
#include <cmath>

namespace braid::gvp {

using prob::DistTable;
using prob::VpMode;

// ---------------------------------------------------------------------------
// UtilityTable

UtilityTable::UtilityTable(const CausalModel& shape, std::vector<std::vector<double>> values)
    : values_(std::move(values)) {
  if (values_.size() != shape.num_variables())
    throw ValidationError("utility table needs one block per variable");
  arity_.resize(values_.size());
  for (size_t t = 0; t < values_.size(); ++t) {
    arity_[t] = shape.variable(t).alphabet.size();
    if (values_[t].size() != shape.num_histories(t) * arity_[t])
      throw ValidationError("utility block size mismatch at variable '" +
                            shape.variable(t).name + "'");
    for (double v : values_[t])
      if (!std::isfinite(v)) throw ValidationError("target utilities must be finite");
  }
}

UtilityTable UtilityTable::zeros(const CausalModel& shape) {
  std::vector<std::vector<double>> blocks(shape.num_variables());
  for (size_t t = 0; t < shape.num_variables(); ++t)
    blocks[t].assign(shape.num_histories(t) * shape.variable(t).alphabet.size(), 0.0);
  return UtilityTable(shape, std::move(blocks));
}

double UtilityTable::value(size_t t, size_t history_rank, size_t symbol) const {
  return values_[t][history_rank * arity_[t] + symbol];
}

bool UtilityTable::matches(const CausalModel& shape) const {
  if (num_variables() != shape.num_variables()) return false;
  for (size_t t = 0; t < arity_.size(); ++t) {
    if (arity_[t] != shape.variable(t).alphabet.size()) return false;
    if (values_[t].size() != shape.num_histories(t) * arity_[t]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// GvpProblem

GvpProblem::GvpProblem(CausalModel ref, std::optional<CausalModel> cand, UtilityTable util,
                       Temperature a)
    : reference(std::move(ref)),
      candidate(std::move(cand)),
      target_utility(std::move(util)),
      alpha(a) {
  if (candidate && !reference.same_structure(*candidate))
    throw ValidationError("candidate must share the reference's variable structure");
  if (!target_utility.matches(reference))
    throw ValidationError("utility table does not match the variable structure");
}

// ---------------------------------------------------------------------------
// Auxiliary measures

std::pair<CausalModel, CausalModel> build_auxiliary(const GvpProblem& problem) {
  if (!problem.candidate) throw ValidationError("auxiliary measures need a candidate");
  const auto& ref = problem.reference;
  const auto& cand = *problem.candidate;
  std::vector<DistTable> g_tables, r_tables;
  for (size_t t = 0; t < ref.num_variables(); ++t) {
    const bool controlled = ref.variable(t).vp_mode == VpMode::Controlled;
    g_tables.push_back(controlled ? cand.conditional(t) : ref.conditional(t));
    r_tables.push_back(controlled ? ref.conditional(t) : cand.conditional(t));
  }
  return {CausalModel(ref.variables(), std::move(g_tables)),
          CausalModel(ref.variables(), std::move(r_tables))};
}

// ---------------------------------------------------------------------------
// Objective

namespace {

double objective_impl(const CausalModel& ref, const CausalModel& cand,
                      const UtilityTable& util, double alpha) {
  const size_t T = ref.num_variables();
  double total = 0.0;
  const size_t n = ref.num_sequences();
  for (size_t rank = 0; rank < n; ++rank) {
    const prob::History seq = ref.history_of(rank, T);
    double g = 1.0, u_sum = 0.0, log_ratio = 0.0;
    size_t prefix = 0;
    for (size_t t = 0; t < T; ++t) {
      const bool controlled = ref.variable(t).vp_mode == VpMode::Controlled;
      const double pc = cand.conditional(t).prob(prefix, seq[t]);
      const double pr = ref.conditional(t).prob(prefix, seq[t]);
      const double g_factor = controlled ? pc : pr;
      const double r_factor = controlled ? pr : pc;
      g *= g_factor;
      if (g == 0.0) break;
      u_sum += util.value(t, prefix, seq[t]);
      if (r_factor == 0.0) return kNegInf;  // G not dominated by R
      log_ratio += std::log2(g_factor / r_factor);
      prefix = prefix * ref.variable(t).alphabet.size() + seq[t];
    }
    if (g == 0.0) continue;
    total += g * (u_sum - alpha * log_ratio);
  }
  return total;
}

// Prefix weights at level t under the G-measure factors.
std::vector<double> forward_weights(const CausalModel& ref, const CausalModel& cand, size_t t) {
  std::vector<double> w{1.0};
  for (size_t s = 0; s < t; ++s) {
    const bool controlled = ref.variable(s).vp_mode == VpMode::Controlled;
    const DistTable& table = controlled ? cand.conditional(s) : ref.conditional(s);
    std::vector<double> next(w.size() * table.arity());
    for (size_t h = 0; h < w.size(); ++h)
      for (size_t x = 0; x < table.arity(); ++x)
        next[h * table.arity() + x] = w[h] * table.prob(h, x);
    w = std::move(next);
  }
  return w;
}

// Expected objective-to-go W at level `level` (one entry per history rank),
// under the current candidate. Terms on zero-G-weight branches contribute
// nothing; -inf marks branches where G escapes R's support.
std::vector<double> value_to_go(const CausalModel& ref, const CausalModel& cand,
                                const UtilityTable& util, double alpha, size_t level) {
  const size_t T = ref.num_variables();
  std::vector<double> w(ref.num_histories(T), 0.0);
  for (size_t s = T; s-- > level;) {
    const bool controlled = ref.variable(s).vp_mode == VpMode::Controlled;
    const size_t arity = ref.variable(s).alphabet.size();
    std::vector<double> prev(ref.num_histories(s), 0.0);
    for (size_t h = 0; h < prev.size(); ++h) {
      double acc = 0.0;
      for (size_t x = 0; x < arity; ++x) {
        const double pc = cand.conditional(s).prob(h, x);
        const double pr = ref.conditional(s).prob(h, x);
        const double g_factor = controlled ? pc : pr;
        if (g_factor == 0.0) continue;
        const double r_factor = controlled ? pr : pc;
        if (r_factor == 0.0) {
          acc = kNegInf;
          break;
        }
        const double step = util.value(s, h, x) - alpha * std::log2(g_factor / r_factor) +
                            w[h * arity + x];
        if (step == kNegInf) {
          acc = kNegInf;
          break;
        }
        acc += g_factor * step;
      }
      prev[h] = acc;
    }
    w = std::move(prev);
  }
  return w;
}

// Group ranks at level t by the projection of the history onto observable
// variables. groups[rank] = group id; members[id] = ranks in the group.
struct VisibleGroups {
  std::vector<size_t> group_of;
  std::vector<std::vector<size_t>> members;
};

VisibleGroups visible_groups(const CausalModel& ref, size_t t) {
  VisibleGroups out;
  const size_t n = ref.num_histories(t);
  out.group_of.resize(n);
  size_t vis_count = 1;
  for (size_t s = 0; s < t; ++s)
    if (ref.variable(s).observable()) vis_count *= ref.variable(s).alphabet.size();
  out.members.resize(vis_count);
  for (size_t rank = 0; rank < n; ++rank) {
    const prob::History h = ref.history_of(rank, t);
    size_t vis = 0;
    for (size_t s = 0; s < t; ++s)
      if (ref.variable(s).observable()) vis = vis * ref.variable(s).alphabet.size() + h[s];
    out.group_of[rank] = vis;
    out.members[vis].push_back(rank);
  }
  return out;
}

}  // namespace

double gvp_objective(const GvpProblem& problem) {
  if (!problem.candidate) throw ValidationError("objective needs a candidate");
  return objective_impl(problem.reference, *problem.candidate, problem.target_utility,
                        problem.alpha.alpha);
}

double gvp_objective_for(const GvpProblem& problem, const CausalModel& candidate) {
  if (!problem.reference.same_structure(candidate))
    throw ValidationError("candidate must share the reference's variable structure");
  return objective_impl(problem.reference, candidate, problem.target_utility,
                        problem.alpha.alpha);
}

GvpObjectiveParts gvp_objective_parts(const GvpProblem& problem, const CausalModel& candidate) {
  if (!problem.reference.same_structure(candidate))
    throw ValidationError("candidate must share the reference's variable structure");
  const CausalModel& ref = problem.reference;
  const UtilityTable& util = problem.target_utility;
  const size_t T = ref.num_variables();
  GvpObjectiveParts parts{0.0, 0.0, 0.0};
  const size_t n = ref.num_sequences();
  for (size_t rank = 0; rank < n; ++rank) {
    const prob::History seq = ref.history_of(rank, T);
    double g = 1.0, u_sum = 0.0, log_ratio = 0.0;
    size_t prefix = 0;
    for (size_t t = 0; t < T; ++t) {
      const bool controlled = ref.variable(t).vp_mode == VpMode::Controlled;
      const double pc = candidate.conditional(t).prob(prefix, seq[t]);
      const double pr = ref.conditional(t).prob(prefix, seq[t]);
      const double g_factor = controlled ? pc : pr;
      const double r_factor = controlled ? pr : pc;
      g *= g_factor;
      if (g == 0.0) break;
      u_sum += util.value(t, prefix, seq[t]);
      if (r_factor == 0.0) {
        log_ratio = kPosInf;
        break;
      }
      log_ratio += std::log2(g_factor / r_factor);
      prefix = prefix * ref.variable(t).alphabet.size() + seq[t];
    }
    if (g == 0.0) continue;
    parts.expected_utility += g * u_sum;
    parts.kl_bits = parts.kl_bits == kPosInf || log_ratio == kPosInf
                        ? kPosInf
                        : parts.kl_bits + g * log_ratio;
  }
  parts.objective = parts.kl_bits == kPosInf
                        ? kNegInf
                        : parts.expected_utility - problem.alpha.alpha * parts.kl_bits;
  return parts;
}

CausalModel gvp_solve(const GvpProblem& problem) {
  const CausalModel& ref = problem.reference;
  const UtilityTable& util = problem.target_utility;
  const double alpha = problem.alpha.alpha;
  const size_t T = ref.num_variables();

  // Feasible start: group-average the reference so every conditional is
  // already constant across hidden coordinates. Within a visible group the
  // candidate's own factors then cancel out of the G-prefix weights, which
  // makes one backward sweep exact.
  CausalModel cand = [&] {
    std::vector<DistTable> tables;
    for (size_t t = 0; t < T; ++t) {
      const size_t arity = ref.variable(t).alphabet.size();
      const VisibleGroups groups = visible_groups(ref, t);
      std::vector<std::vector<double>> rows(ref.num_histories(t));
      for (const auto& members : groups.members) {
        if (members.empty()) continue;
        std::vector<double> row(arity, 0.0);
        for (size_t m : members)
          for (size_t x = 0; x < arity; ++x)
            row[x] += ref.conditional(t).prob(m, x) / static_cast<double>(members.size());
        for (size_t m : members) rows[m] = row;
      }
      std::vector<size_t> radices;
      for (size_t s = 0; s < t; ++s) radices.push_back(ref.variable(s).alphabet.size());
      tables.emplace_back(std::move(radices), arity, std::move(rows));
    }
    return CausalModel(ref.variables(), std::move(tables));
  }();

  double best = objective_impl(ref, cand, util, alpha);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (size_t t = T; t-- > 0;) {
      const size_t arity = ref.variable(t).alphabet.size();
      const VisibleGroups groups = visible_groups(ref, t);
      const std::vector<double> weight = forward_weights(ref, cand, t);
      const std::vector<double> togo = value_to_go(ref, cand, util, alpha, t + 1);
      const bool controlled = ref.variable(t).vp_mode == VpMode::Controlled;

      std::vector<std::vector<double>> rows(ref.num_histories(t));
      for (const auto& members : groups.members) {
        if (members.empty()) continue;
        double total = 0.0;
        for (size_t m : members) total += weight[m];

        std::vector<double> row(arity, 0.0);
        if (total <= 0.0) {
          // Unreachable under G: keep the reference conditional
          // (averaged across hidden coordinates when grouped).
          for (size_t m : members)
            for (size_t x = 0; x < arity; ++x)
              row[x] += ref.conditional(t).prob(m, x) / static_cast<double>(members.size());
        } else if (!controlled) {
          // Predictive form: hidden-posterior mixture of reference rows.
          for (size_t m : members) {
            const double wm = weight[m] / total;
            for (size_t x = 0; x < arity; ++x)
              row[x] += wm * ref.conditional(t).prob(m, x);
          }
        } else {
          // Soft-max form: weighted exponent of utility, value-to-go and
          // log reference.
          std::vector<double> score(arity, 0.0);
          for (size_t x = 0; x < arity; ++x) {
            double s = 0.0;
            for (size_t m : members) {
              const double wm = weight[m] / total;
              if (wm == 0.0) continue;
              const double lref = log2_safe(ref.conditional(t).prob(m, x));
              const double child = togo[m * arity + x];
              if (lref == kNegInf || child == kNegInf) {
                s = kNegInf;
                break;
              }
              s += wm * (util.value(t, m, x) + child + alpha * lref);
            }
            score[x] = s == kNegInf ? kNegInf : s / alpha;
          }
          if (log2_normalize(score, row) == kNegInf)
            throw DegenerateError(
                "controlled variable has no feasible support under the reference");
        }
        for (size_t m : members) rows[m] = row;
      }

      std::vector<size_t> radices;
      for (size_t s = 0; s < t; ++s) radices.push_back(ref.variable(s).alphabet.size());
      std::vector<DistTable> tables;
      for (size_t s = 0; s < T; ++s)
        tables.push_back(s == t ? DistTable(radices, arity, rows) : cand.conditional(s));
      cand = CausalModel(ref.variables(), std::move(tables));
    }
    const double obj = objective_impl(ref, cand, util, alpha);
    if (obj <= best + 1e-13 * (1.0 + std::abs(best))) {
      best = std::max(best, obj);
      break;
    }
    best = obj;
  }
  return cand;
}

}  // namespace braid::gvp
