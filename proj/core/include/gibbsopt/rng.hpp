#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace gibbsopt {

/// SplitMix64 finalizer. Used to turn structured keys into engine seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seedable random source with portable conversions.
///
/// The engine is std::mt19937_64, whose output sequence is pinned by the
/// standard. Every conversion (uniform doubles, bounded integers, Cauchy and
/// normal variates) is implemented here instead of through the <random>
/// distribution classes, whose algorithms differ between standard libraries.
/// Identical seeds therefore give identical streams on every platform.
///
/// Stream splitting: `Rng::stream(seed, k0, k1)` derives a child generator
/// from a root seed and two keys. A benchmark run draws indices from
/// stream(seed, 0) and the noise of summand i from stream(splitmix64(seed ^ 1), i),
/// so its randomness does not depend on how runs are scheduled across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  static Rng stream(std::uint64_t seed, std::uint64_t key0, std::uint64_t key1 = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  double uniform(double lo, double hi);
  /// Unbiased integer in [0, n). Requires n > 0.
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double cauchy(double location, double scale);
  /// Standard normal via Box-Muller (no cached second variate).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace gibbsopt
