#pragma once

// Seeded block-preference interaction generator used by the trainer tests
// and the acceptance suite. Users belong to one of `num_blocks` groups and
// draw most of their interactions from the matching contiguous item block,
// with a uniform noise floor over the whole universe.

#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "cfrank/dataset.hpp"

namespace cfrank::testsupport {

struct SyntheticSpec {
  index_t num_users = 2000;
  index_t num_items = 1000;
  index_t inter_per_user = 50;
  index_t num_blocks = 10;
  double noise = 0.1;  // probability of drawing outside the user's block
  std::uint64_t seed = 1;
};

inline std::vector<RawPair> block_preference_pairs(const SyntheticSpec& spec) {
  std::vector<RawPair> pairs;
  pairs.reserve(static_cast<std::size_t>(spec.num_users) *
                static_cast<std::size_t>(spec.inter_per_user));
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<index_t> any_item(0, spec.num_items - 1);
  const index_t block_size = spec.num_items / spec.num_blocks;

  for (index_t u = 0; u < spec.num_users; ++u) {
    const index_t block = u % spec.num_blocks;
    const index_t lo = block * block_size;
    std::uniform_int_distribution<index_t> block_item(lo, lo + block_size - 1);
    std::unordered_set<index_t> chosen;
    while (chosen.size() < static_cast<std::size_t>(spec.inter_per_user)) {
      const index_t i = coin(rng) < spec.noise ? any_item(rng) : block_item(rng);
      if (chosen.insert(i).second)
        pairs.emplace_back("u" + std::to_string(u), "i" + std::to_string(i));
    }
  }
  return pairs;
}

}  // namespace cfrank::testsupport
