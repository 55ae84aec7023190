#pragma once

#include <cstdint>
#include <string_view>

#include "microloc/vec.hpp"

namespace microloc {

namespace detail {
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

/// Deterministic counter-based random stream. Child streams are derived by
/// label or index, so parallel tasks draw from independent streams regardless
/// of scheduling order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // burn-in decorrelates trivially related seeds
    next();
    next();
  }

  uint64_t next() { return detail::splitmix64(state_); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  Cplx unit_phase() {
    double t = uniform(0.0, 6.283185307179586476925286766559);
    return Cplx(std::cos(t), std::sin(t));
  }

  Rng split(std::string_view label) const {
    uint64_t s = state_ ^ detail::fnv1a(label);
    return Rng(s);
  }
  Rng split(uint64_t index) const {
    uint64_t s = state_ ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng(s);
  }

 private:
  uint64_t state_;
};

}  // namespace microloc
