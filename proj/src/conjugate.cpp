#include "braid/conjugate.hpp"

#include <algorithm>
#include <cmath>

namespace braid::conjugate {

UtilityVector::UtilityVector(std::vector<double> v, double b) : values(std::move(v)), beta(b) {
  if (values.empty()) throw ValidationError("utility vector must be nonempty");
  if (!std::isfinite(beta)) throw ValidationError("beta must be finite");
  bool any_finite = false;
  for (double u : values) {
    if (std::isnan(u) || u == kPosInf)
      throw ValidationError("utilities must be finite or -inf");
    if (std::isfinite(u)) any_finite = true;
  }
  if (!any_finite) throw ValidationError("utility vector needs at least one finite entry");
}

UtilityVector utility_from_measure(std::span<const double> p, Temperature alpha, double beta) {
  std::vector<double> u(p.size());
  for (size_t i = 0; i < p.size(); ++i) u[i] = alpha.alpha * log2_safe(p[i]) + beta;
  return UtilityVector(std::move(u), beta);
}

GibbsResult measure_from_utility(const UtilityVector& u, Temperature alpha) {
  std::vector<double> lw(u.values.size());
  for (size_t i = 0; i < lw.size(); ++i)
    lw[i] = u.values[i] == kNegInf ? kNegInf : u.values[i] / alpha.alpha;
  GibbsResult out;
  const double lz = log2_normalize(lw, out.p);
  if (lz == kNegInf) throw DegenerateError("all utilities are -inf; Gibbs measure undefined");
  out.beta = alpha.alpha * lz;
  return out;
}

FreeUtilityReport free_utility(std::span<const double> p, const UtilityVector& u,
                               Temperature alpha) {
  if (p.size() != u.values.size()) throw ValidationError("shape mismatch");
  double eu = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (u.values[i] == kNegInf) {
      eu = kNegInf;
      break;
    }
    eu += p[i] * u.values[i];
  }
  const double ent = alpha.alpha * entropy_bits(p);
  return {eu, ent, eu == kNegInf ? kNegInf : eu + ent};
}

ConjugacyCheck verify_conjugacy(std::span<const double> p, const UtilityVector& u,
                                Temperature alpha, double tol) {
  if (p.size() != u.values.size()) throw ValidationError("shape mismatch");
  double lo = kPosInf, hi = kNegInf;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (u.values[i] == kNegInf) return {false, kPosInf};
    const double gap = u.values[i] - alpha.alpha * std::log2(p[i]);
    lo = std::min(lo, gap);
    hi = std::max(hi, gap);
  }
  if (lo == kPosInf) return {false, kPosInf};  // empty support
  const double spread = hi - lo;
  return {spread <= tol, spread};
}

}  // namespace braid::conjugate
