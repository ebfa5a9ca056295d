#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace partprompt {

struct RngSeed {
  std::uint64_t value = 0;
};

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a tuple of tags. The mapping is
/// fixed so that serial and parallel runs see identical sub-streams.
constexpr RngSeed derive_seed(RngSeed parent, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = mix64(parent.value);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632BE59BD9B4E019ULL));
  return RngSeed{h};
}

using Rng = std::mt19937_64;

inline Rng make_rng(RngSeed seed) { return Rng(seed.value); }

/// Uniform double in [0, 1) from the top 53 bits; independent of the standard
/// library's distribution implementation.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection (no modulo bias).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % n;
}

}  // namespace partprompt
