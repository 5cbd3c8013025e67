#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rbda {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed: a pure function of the base seed and the counters,
/// so streams are reproducible and independent of generation order.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> counters) noexcept {
  std::uint64_t s = mix64(base);
  for (std::uint64_t c : counters) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
  return s;
}

/// Stream tags used as the last counter when deriving per-variable seeds.
enum class StreamTag : std::uint64_t { u = 1, v = 2, theta = 3, pressure = 4, bootstrap = 5 };

using Rng = std::mt19937_64;

}  // namespace rbda
