#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace growthopt {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed so that path k of a run never depends on how many paths
/// came before it.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Seeded generator with platform-independent output: the engine is
/// std::mt19937_64 (fully specified by the standard) and the uniform draw is
/// built from raw bits rather than std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Samples an index from a cumulative distribution (last entry == 1).
  int categorical(std::span<const double> cdf) noexcept {
    const double u = uniform();
    const int n = static_cast<int>(cdf.size());
    for (int i = 0; i + 1 < n; ++i) {
      if (u < cdf[i]) return i;
    }
    return n - 1;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace growthopt
