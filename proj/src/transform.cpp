#include "braid/transform.hpp"

#include <cmath>

namespace braid::transform {

namespace {

void check_normalized(std::span<const double> p, const char* what) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ValidationError(std::string(what) + ": negative probability");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9)
    throw ValidationError(std::string(what) + ": probabilities must sum to 1");
}

}  // namespace

TransformProblem::TransformProblem(std::vector<double> p, UtilityVector u, Temperature a)
    : prior(std::move(p)), target_utility(std::move(u)), alpha(a) {
  check_normalized(prior, "prior");
  if (prior.size() != target_utility.values.size())
    throw ValidationError("prior and target utility must share the alphabet");
}

double free_utility_difference(std::span<const double> p_i, std::span<const double> p_f,
                               const UtilityVector& u_star, Temperature alpha) {
  if (p_i.size() != p_f.size() || p_i.size() != u_star.values.size())
    throw ValidationError("shape mismatch");
  double total = 0.0;
  for (size_t x = 0; x < p_f.size(); ++x) {
    if (p_f[x] == 0.0) continue;
    if (p_i[x] == 0.0 || u_star.values[x] == kNegInf) return kNegInf;
    total += p_f[x] * u_star.values[x];
    total -= alpha.alpha * p_f[x] * std::log2(p_f[x] / p_i[x]);
  }
  return total;
}

std::vector<double> control_solution(const TransformProblem& problem) {
  const size_t n = problem.prior.size();
  std::vector<double> lw(n);
  for (size_t x = 0; x < n; ++x) {
    const double lp = log2_safe(problem.prior[x]);
    const double u = problem.target_utility.values[x];
    lw[x] = (lp == kNegInf || u == kNegInf) ? kNegInf : lp + u / problem.alpha.alpha;
  }
  std::vector<double> out;
  if (log2_normalize(lw, out) == kNegInf)
    throw DegenerateError(
        "control solution degenerate: prior support disjoint from finite-utility support");
  return out;
}

double control_optimum_value(const TransformProblem& problem) {
  const size_t n = problem.prior.size();
  std::vector<double> lw(n);
  for (size_t x = 0; x < n; ++x) {
    const double lp = log2_safe(problem.prior[x]);
    const double u = problem.target_utility.values[x];
    lw[x] = (lp == kNegInf || u == kNegInf) ? kNegInf : lp + u / problem.alpha.alpha;
  }
  const double lz = log2_sum_exp(lw);
  if (lz == kNegInf)
    throw DegenerateError(
        "control solution degenerate: prior support disjoint from finite-utility support");
  return problem.alpha.alpha * lz;
}

std::vector<double> estimation_solution(std::span<const double> p_f) {
  check_normalized(p_f, "final measure");
  return {p_f.begin(), p_f.end()};
}

}  // namespace braid::transform
