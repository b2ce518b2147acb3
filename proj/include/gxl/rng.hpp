// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gxl {

// Deterministic random source. std::mt19937_64 has a fully specified bit
// stream, but the standard distributions do not, so every distribution here
// is hand-rolled. Identical seeds give identical streams on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (second variate cached).
  double normal();
  double normal(double mean, double stddev);
  // Uniform integer in the inclusive range [lo, hi].
  int64_t uniform_int(int64_t lo, int64_t hi);
  // True with probability p.
  bool bernoulli(double p);

  // Fisher-Yates shuffle driven by uniform_int.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i)));
      std::swap(v[i], v[j]);
    }
  }

  // Independent child stream derived from this generator's original seed,
  // not its current state, so forks do not depend on consumption order.
  Rng fork(uint64_t stream) const;

 private:
  std::mt19937_64 gen_;
  uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 finalizer; used for seed derivation.
uint64_t mix_seed(uint64_t a, uint64_t b);

}  // namespace gxl
