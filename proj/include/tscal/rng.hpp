#pragma once

#include <cstdint>

namespace tscal {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Reproducibility key for one image: the run-level base seed plus the
/// image's position in its batch. Equal keys give equal noise fields.
struct Seed {
  std::uint64_t base = 0;
  std::uint64_t image_index = 0;

  constexpr std::uint64_t stream() const noexcept {
    return mix64(base ^ mix64(image_index + 0x9e3779b97f4a7c15ULL));
  }
};

/// Derives an independent child seed, e.g. one per sweep setting.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) noexcept {
  return mix64(base + 0x9e3779b97f4a7c15ULL * (salt + 1));
}

/// Sequential SplitMix64 generator. Every transform below is written out
/// by hand so draws are identical on every platform and standard library.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  /// Generator for one element of a counter-addressed stream; used per pixel
  /// so a pixel's draws depend only on (stream, index).
  static constexpr SplitMix64 at(std::uint64_t stream, std::uint64_t index) noexcept {
    return SplitMix64(mix64(stream ^ mix64(index ^ 0xd1b54a32d192ed03ULL)));
  }

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller (one variate per call).
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  /// Poisson variate: inversion for lambda < 30, PTRS rejection above.
  std::uint64_t poisson(double lambda) noexcept;

 private:
  std::uint64_t state_;
};

}  // namespace tscal
