#pragma once

// Deterministic, splittable random streams. Simulations must replay
// bit-identically from a seed on every platform, so sampling avoids
// std::uniform_*_distribution (whose algorithms are implementation
// defined) and draws directly from a splitmix64 state.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "braid/errors.hpp"

namespace braid {

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) via bitmask rejection.
  size_t uniform_below(size_t n) {
    if (n == 0) throw ParameterError("uniform_below: n must be positive");
    uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      const uint64_t v = next_u64() & mask;
      if (v < n) return static_cast<size_t>(v);
    }
  }

  // Samples an index from a normalized probability vector by inverse CDF.
  size_t sample(std::span<const double> probs) {
    const double u = uniform01();
    double acc = 0.0;
    size_t last_positive = 0;
    bool seen = false;
    for (size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = i;
      seen = true;
      acc += probs[i];
      if (u < acc) return i;
    }
    if (!seen) throw ParameterError("sample: probability vector has no mass");
    return last_positive;  // u fell into rounding slack at the top
  }

  // Exponential spacings normalized onto the simplex (Dirichlet(1)).
  std::vector<double> simplex_point(size_t n) {
    std::vector<double> g(n);
    double total = 0.0;
    for (auto& v : g) {
      double u = uniform01();
      if (u <= 0.0) u = 0x1.0p-53;
      v = -std::log(u);
      total += v;
    }
    for (auto& v : g) v /= total;
    return g;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Independent substream; children of distinct indices never collide in
  // practice because the derivation rehashes the full state.
  Rng child(uint64_t stream) const {
    Rng mix(state_ ^ (0xa0761d6478bd642full + stream * 0xe7037ed1a0b428dbull));
    mix.next_u64();
    return Rng(mix.next_u64());
  }

 private:
  uint64_t state_;
};

}  // namespace braid
