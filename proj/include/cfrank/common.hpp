#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfrank {

// Dense user/item index. All public APIs use dense indices produced by the
// dataset builder; external IDs are arbitrary strings.
using index_t = std::int32_t;

// Thrown on violated preconditions and shape mismatches.
inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

// splitmix64 finalizer; combines a root seed with a stream/index so that
// every component draws from an independent deterministic stream.
inline std::uint64_t seed_mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Fixed sub-seed streams derived from one root seed.
namespace seed_stream {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kSampler = 3;
}  // namespace seed_stream

}  // namespace cfrank
