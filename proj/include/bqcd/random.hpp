#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace bqcd {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for (master, run, stream) triples:
///   mix64(mix64(mix64(master) ^ run) ^ stream)
/// Stream ids below kThetaStarStream are detector indices.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run,
                                    std::uint64_t stream) noexcept {
  return mix64(mix64(mix64(master) ^ run) ^ stream);
}

inline constexpr std::uint64_t kThetaStarStream = 0xffffffffffffffffULL;

/// Random stream owned by exactly one simulation. Wraps mt19937_64, whose
/// output sequence is fixed by the standard; the uniform and normal
/// transforms are written out here so draws are identical across standard
/// library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1), 53 bits.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; one variate per call, nothing cached.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  /// Uniform index in [0, n) without modulo bias.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return static_cast<std::size_t>(draw % bound);
  }

  /// Draw from a probability vector by inverse CDF. Falls back to the last
  /// positive entry when rounding leaves the cumulative sum short of 1.
  template <typename Probabilities>
  std::size_t categorical(const Probabilities& probs) {
    const double u = uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(probs.size()); ++i) {
      if (probs[i] <= 0) continue;
      cumulative += static_cast<double>(probs[i]);
      last_positive = i;
      if (u < cumulative) return i;
    }
    return last_positive;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bqcd
