#pragma once

#include <cstdint>
#include <random>

namespace gated {

// Deterministic RNG with hand-rolled distributions, so streams are stable
// across standard libraries and platforms for a given seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n must be > 0.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // Box-Muller transform; caches the second variate.
  double normal(double mean = 0.0, double stddev = 1.0);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // splitmix64 step: derives well-separated sub-stream seeds from one seed.
  static uint64_t mix(uint64_t seed, uint64_t salt);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gated
