#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace riskforge {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Per-stage seed: splitmix64(root XOR fnv1a64(stage)). Stages draw from
/// independent streams, so re-running one stage never perturbs another.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  return splitmix64(root ^ fnv1a64(stage));
}

/// Stable 64-bit hash of an integer key under a seed; used to assign folds and
/// splits by row identity rather than row position.
inline std::uint64_t keyed_hash(std::uint64_t seed, std::int64_t key) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(key));
}

}  // namespace riskforge
