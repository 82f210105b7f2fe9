#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace spanreid {

// Deterministic random source. All sampling goes through explicit methods
// (no std::*_distribution) so that streams are bit-stable across standard
// library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent child stream; used to give every sample, layer
  // or epoch its own seed.
  Rng fork(uint64_t stream) const;

  static uint64_t mix(uint64_t a, uint64_t b);

 private:
  uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace spanreid
