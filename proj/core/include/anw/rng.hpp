#pragma once

#include <cstdint>
#include <vector>

namespace anw {

// Deterministic 64-bit generator used for every random decision in the
// library: xoshiro256++ seeded through the splitmix64 finalizer. All draws
// (uniform doubles, bounded integers, gaussians) are defined on top of
// next_u64() only, so a given seed reproduces bit-identical streams on any
// platform, independent of the standard library's <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53 mantissa bits.
  double next_double();

  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n must be nonzero.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double gaussian();

  // Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Stable derivation of child seeds: splitmix64 finalizer over the parent
  // seed xor a salted index. Used for per-run, per-epoch and per-sample
  // streams so parallel work stays reproducible.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t state_[4];
};

}  // namespace anw
