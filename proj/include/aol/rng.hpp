#pragma once

#include <cstdint>
#include <random>

namespace aol {

// splitmix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic draws on top of std::mt19937_64. The engine's output
// sequence is fixed by the standard; the transforms below avoid
// std::*_distribution, whose mappings differ between standard libraries.
// Consumption is part of the data contract: one engine step per uniform,
// exactly two per normal (Box-Muller, cosine branch, no caching).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace aol
