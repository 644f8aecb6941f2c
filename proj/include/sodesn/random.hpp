#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sodesn {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream identifiers (splitmix64 finalizer), so that
/// independent streams (per sensor, per fold, per link set) can be derived
/// from a single user seed without depending on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (auto id : ids) h = mix(h ^ mix(id + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> ids = {}) {
  return Rng(derive_seed(base, ids));
}

/// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t links = 2;
inline constexpr std::uint64_t noise = 3;
inline constexpr std::uint64_t data = 4;
inline constexpr std::uint64_t faults = 5;
inline constexpr std::uint64_t state = 6;
}  // namespace stream

}  // namespace sodesn
