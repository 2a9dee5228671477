#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "cfrank/dataset.hpp"

namespace cfrank {

// One optimization step worth of (user, positive, negatives) triples.
// neg_items is row-major B x num_neg; every negative lies outside the
// sampled user's training set.
struct TrainBatch {
  std::vector<index_t> users;
  std::vector<index_t> pos_items;
  std::vector<index_t> neg_items;
  index_t num_neg = 0;

  index_t size() const { return static_cast<index_t>(users.size()); }
};

// Streams one epoch of batches: training pairs are shuffled once with a
// generator seeded by (seed, epoch), then consumed in order; negatives are
// drawn by uniform rejection against the user's training items, with
// replacement across slots.
class EpochSampler {
 public:
  EpochSampler(const InteractionDataset& ds, index_t batch_size, index_t num_neg,
               std::uint64_t seed, std::uint64_t epoch)
      : ds_(&ds),
        batch_size_(batch_size),
        num_neg_(num_neg),
        rng_(seed_mix(seed, epoch)),
        item_dist_(0, ds.num_items - 1) {
    require(batch_size >= 1, "EpochSampler: batch_size must be >= 1");
    require(num_neg >= 1, "EpochSampler: num_neg must be >= 1");
    require(ds.num_items >= 1, "EpochSampler: empty item universe");
    order_.resize(ds.train_pairs.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::optional<TrainBatch> next() {
    const std::size_t remaining = order_.size() - cursor_;
    if (remaining == 0) return std::nullopt;
    const std::size_t take = std::min(remaining, static_cast<std::size_t>(batch_size_));

    TrainBatch batch;
    batch.num_neg = num_neg_;
    batch.users.resize(take);
    batch.pos_items.resize(take);
    batch.neg_items.resize(take * static_cast<std::size_t>(num_neg_));
    for (std::size_t b = 0; b < take; ++b) {
      const auto& [u, i] = ds_->train_pairs[order_[cursor_ + b]];
      batch.users[b] = u;
      batch.pos_items[b] = i;
      fill_negatives(u, &batch.neg_items[b * static_cast<std::size_t>(num_neg_)]);
    }
    cursor_ += take;
    return batch;
  }

 private:
  void fill_negatives(index_t user, index_t* out) {
    const std::vector<index_t>& observed = ds_->user_train_items[static_cast<std::size_t>(user)];
    if (observed.size() >= static_cast<std::size_t>(ds_->num_items))
      throw std::runtime_error("negative sampling impossible: user " + std::to_string(user) +
                               " has interacted with the whole item universe");
    const std::int64_t max_draws = 100ll * num_neg_;
    std::int64_t draws = 0;
    for (index_t j = 0; j < num_neg_; ++j) {
      for (;;) {
        if (++draws > max_draws)
          throw std::runtime_error("negative sampling retry cap exceeded for user " +
                                   std::to_string(user));
        const index_t cand = item_dist_(rng_);
        if (!std::binary_search(observed.begin(), observed.end(), cand)) {
          out[j] = cand;
          break;
        }
      }
    }
  }

  const InteractionDataset* ds_;
  index_t batch_size_;
  index_t num_neg_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<index_t> item_dist_;
  std::vector<std::uint32_t> order_;
  std::size_t cursor_ = 0;
};

// Materializes the full epoch; every training pair appears exactly once.
inline std::vector<TrainBatch> epoch_batches(const InteractionDataset& ds, index_t batch_size,
                                             index_t num_neg, std::uint64_t seed,
                                             std::uint64_t epoch) {
  EpochSampler sampler(ds, batch_size, num_neg, seed, epoch);
  std::vector<TrainBatch> out;
  while (auto b = sampler.next()) out.push_back(std::move(*b));
  return out;
}

}  // namespace cfrank
