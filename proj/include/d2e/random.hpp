#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace d2e {

/// Seeded generator with platform-independent derived distributions
/// (std::*_distribution output is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  void shuffle(std::vector<std::size_t>& items);

 private:
  std::mt19937_64 engine_;
};

/// Decorrelated child seed for a named stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace d2e
