#pragma once

// Constrained transformation of a single-variable measure: the gain in
// free utility when a prior is reshaped under a target utility, and the
// two closed-form variational solutions that fall out of it:
//
//   control     p_f(x) proportional to p_i(x) * 2^{u*(x)/alpha}
//   estimation  p_i = p_f  (minimum relative entropy)

#include <span>
#include <vector>

#include "braid/conjugate.hpp"

namespace braid::transform {

using conjugate::Temperature;
using conjugate::UtilityVector;

struct TransformProblem {
  std::vector<double> prior;
  UtilityVector target_utility;
  Temperature alpha;

  TransformProblem(std::vector<double> p, UtilityVector u, Temperature a);
};

// sum p_f u* - alpha * KL(p_f || p_i), in utility units. -inf encodes an
// infinite resource cost (p_f not absolutely continuous w.r.t. p_i, or
// mass on a -inf utility); never an error.
double free_utility_difference(std::span<const double> p_i, std::span<const double> p_f,
                               const UtilityVector& u_star, Temperature alpha);

// The maximizer of free_utility_difference over all distributions.
std::vector<double> control_solution(const TransformProblem& problem);

// The optimum value the control solution attains:
// alpha * log2 sum_x p_i(x) 2^{u*(x)/alpha}.
double control_optimum_value(const TransformProblem& problem);

// Identity; estimation under full observability keeps the measure.
std::vector<double> estimation_solution(std::span<const double> p_f);

}  // namespace braid::transform
