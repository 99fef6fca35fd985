#pragma once

#include <cstdint>
#include <random>

namespace netband {

/// The random engine used everywhere in the library.
using RandomEngine = std::mt19937_64;

/// SplitMix64 finalizer. Stable across platforms; used to derive independent
/// stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  return mix_seed(mix_seed(base) ^ (salt * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
}

}  // namespace netband
