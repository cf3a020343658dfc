#pragma once

#include <cstdint>
#include <random>

namespace fishforge {

/// Stateless 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Stable hash of (seed, index) used to derive independent sub-seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64 output is fixed by the standard; the distribution helpers
/// here are written out so the same seed yields the same doubles with any
/// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive, rejection-sampled (unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

  /// Child generator whose stream depends only on this generator's next draw
  /// and `stream`.
  Rng fork(std::uint64_t stream) { return Rng(derive_seed(next_u64(), stream)); }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace fishforge
