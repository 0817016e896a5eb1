#pragma once

// The probability <-> utility conversion law and the free utility
// functional. A measure P and a utility U are conjugate when
//
//   U(x) = alpha * log2 P(x) + beta
//
// for a temperature alpha > 0 and translation constant beta. Equivalently
// P is the Gibbs measure of U at temperature alpha. Logs are base 2, so
// alpha carries units of utility per bit. Zero-probability symbols map to
// a utility of -inf and survive the round trip.

#include <span>
#include <vector>

#include "braid/errors.hpp"
#include "braid/numeric.hpp"

namespace braid::conjugate {

struct Temperature {
  double alpha;

  explicit Temperature(double a) : alpha(a) {
    if (!(a > 0.0) || !std::isfinite(a))
      throw ParameterError("temperature must be positive and finite");
  }
};

struct UtilityVector {
  std::vector<double> values;  // -inf allowed, at least one finite entry
  double beta = 0.0;

  UtilityVector(std::vector<double> v, double b);
};

struct FreeUtilityReport {
  double expected_utility;
  double entropy_term;  // alpha * H(p), bits scaled to utility
  double total;         // expected_utility + entropy_term
};

struct GibbsResult {
  std::vector<double> p;
  double beta;  // alpha * log2 Z; the free utility the measure attains
};

struct ConjugacyCheck {
  bool conjugate;
  double max_deviation;  // spread of u - alpha*log2 p across the support
};

// U(x) = alpha * log2 p(x) + beta; p(x) = 0 maps to -inf.
UtilityVector utility_from_measure(std::span<const double> p, Temperature alpha, double beta);

// Gibbs measure p(x) = 2^{u(x)/alpha} / Z, computed in log domain.
// The returned beta satisfies utility_from_measure(p, alpha, beta) == u
// on the support.
GibbsResult measure_from_utility(const UtilityVector& u, Temperature alpha);

// F(p; u) = sum p(x) u(x) + alpha * H(p), with 0*(-inf) = 0. Mass on a
// -inf utility makes the total -inf; that is a value, not an error.
FreeUtilityReport free_utility(std::span<const double> p, const UtilityVector& u,
                               Temperature alpha);

// True iff u(x) - alpha*log2 p(x) is constant across the support of p
// within tol.
ConjugacyCheck verify_conjugacy(std::span<const double> p, const UtilityVector& u,
                                Temperature alpha, double tol = 1e-9);

}  // namespace braid::conjugate
