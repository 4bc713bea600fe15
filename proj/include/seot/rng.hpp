#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace seot {

// Derives an independent generator seed for a named stage from the run seed,
// so that e.g. the eigensolver start vector does not shift when the
// barycenter init consumes a different number of draws.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  // splitmix64 finalizer
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(substream_seed(seed, name));
}

}  // namespace seot
