#pragma once

// Base-2 log-domain arithmetic. Everything in this library measures
// information in bits; -inf is the log of an exactly-zero probability
// and is a first-class value, never an error by itself.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace braid {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

inline double log2_safe(double p) { return p > 0.0 ? std::log2(p) : kNegInf; }

inline double exp2_safe(double l) { return std::isinf(l) && l < 0.0 ? 0.0 : std::exp2(l); }

// x * y with the convention 0 * (+-inf) = 0.
inline double mul0(double x, double y) {
  if (x == 0.0 || y == 0.0) return 0.0;
  return x * y;
}

// log2(sum_i 2^{lw_i}) with max-subtraction; empty or all -inf gives -inf.
inline double log2_sum_exp(std::span<const double> lw) {
  double m = kNegInf;
  for (double v : lw) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : lw) acc += exp2_safe(v - m);
  return m + std::log2(acc);
}

// Normalizes log-domain weights into a linear probability vector.
// Returns log2 of the partition sum.
inline double log2_normalize(std::span<const double> lw, std::vector<double>& out) {
  const double lz = log2_sum_exp(lw);
  out.resize(lw.size());
  if (lz == kNegInf) {
    std::fill(out.begin(), out.end(), 0.0);
    return lz;
  }
  for (size_t i = 0; i < lw.size(); ++i) out[i] = exp2_safe(lw[i] - lz);
  return lz;
}

// Shannon entropy in bits, 0 log 0 = 0.
inline double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// KL(p || q) in bits; +inf when p puts mass where q has none.
inline double kl_bits(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kPosInf;
    d += p[i] * std::log2(p[i] / q[i]);
  }
  return d;
}

// Total variation distance, (1/2) sum |p - q|.
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace braid
