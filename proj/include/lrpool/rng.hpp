#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lrpool::rng {

/// Counter-based random number generation. Every draw is a pure function of
/// (seed, stream, counter words), so results are independent of execution
/// order and may be reproduced from any thread without shared state.

// Per-module substreams. Keeping them in one enum guarantees two modules
// never collide on the same key layout.
enum class Stream : std::uint64_t {
  SyntheticData = 1,
  DataSplit = 2,
  WeightInit = 3,
  EpochShuffle = 4,
  LearningRateDraw = 5,
  GradientDraw = 6,
  InitialParamDraw = 7,
  RandomTeams = 8,
  Bootstrap = 9,
  SearchSample = 10,
};

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer (Stafford mix13): bijective 64-bit avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// One 64-bit word keyed by up to four counter words.
constexpr std::uint64_t word(std::uint64_t k0, std::uint64_t k1 = 0,
                             std::uint64_t k2 = 0, std::uint64_t k3 = 0) {
  std::uint64_t h = mix64(k0 + kGolden);
  h = mix64(h ^ (k1 + kGolden));
  h = mix64(h ^ (k2 + kGolden));
  h = mix64(h ^ (k3 + kGolden));
  return h;
}

constexpr std::uint64_t word(std::uint64_t seed, Stream s, std::uint64_t k2 = 0,
                             std::uint64_t k3 = 0) {
  return word(seed, static_cast<std::uint64_t>(s), k2, k3);
}

/// Uniform double in [0, 1) from one word (53 mantissa bits).
constexpr double uniform01(std::uint64_t w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, n) via 128-bit multiply.
constexpr std::uint64_t below(std::uint64_t w, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(w) * n) >> 64);
}

/// Standard normal via Box-Muller; consumes two words.
inline double gaussian(std::uint64_t w1, std::uint64_t w2) {
  double u1 = static_cast<double>((w1 >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  double u2 = uniform01(w2);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace lrpool::rng
