#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfrank/backbone.hpp"
#include "cfrank/dataset.hpp"

namespace cfrank {

struct KMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
};

enum class EvalSplit { valid, test };

inline const char* to_string(EvalSplit s) { return s == EvalSplit::valid ? "valid" : "test"; }

namespace detail {

// Scores every item, drops the sorted mask, and selects the top K by
// (score desc, index asc). Scratch buffers are caller-owned so the bulk
// evaluator can reuse them.
inline void topk_into(const PropagatedEmbeddings& emb, index_t u, index_t K,
                      std::span<const index_t> mask_sorted, std::vector<double>& scores,
                      std::vector<index_t>& candidates, std::vector<index_t>& out) {
  const index_t num_items = emb.final_item.rows();
  scores.resize(static_cast<std::size_t>(num_items));
  const auto fu = emb.final_user.row(u);
  for (index_t i = 0; i < num_items; ++i)
    scores[static_cast<std::size_t>(i)] = dot(fu, emb.final_item.row(i));

  candidates.clear();
  std::size_t m = 0;
  for (index_t i = 0; i < num_items; ++i) {
    if (m < mask_sorted.size() && mask_sorted[m] == i) {
      ++m;
      continue;
    }
    candidates.push_back(i);
  }
  auto better = [&](index_t a, index_t b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + K, candidates.end(), better);
  out.assign(candidates.begin(), candidates.begin() + K);
}

}  // namespace detail

// Top-K unmasked items for user u, descending score, ties to the lower index.
inline std::vector<index_t> topk(const PropagatedEmbeddings& emb, index_t u, index_t K,
                                 std::span<const index_t> mask_sorted) {
  require(u >= 0 && u < emb.final_user.rows(), "topk: user out of range");
  require(K >= 1, "topk: K must be >= 1");
  require(static_cast<std::size_t>(K) + mask_sorted.size() <=
              static_cast<std::size_t>(emb.final_item.rows()),
          "topk: K exceeds the number of unmasked items");
  std::vector<double> scores;
  std::vector<index_t> candidates;
  std::vector<index_t> out;
  detail::topk_into(emb, u, K, mask_sorted, scores, candidates, out);
  return out;
}

inline double recall_at_k(std::span<const index_t> topk_items,
                          const std::vector<index_t>& test_sorted) {
  require(!test_sorted.empty(), "recall_at_k: empty test set");
  std::size_t hits = 0;
  for (index_t i : topk_items)
    if (std::binary_search(test_sorted.begin(), test_sorted.end(), i)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(test_sorted.size());
}

// Binary relevance; IDCG truncated at min(K, |test|).
inline double ndcg_at_k(std::span<const index_t> topk_items,
                        const std::vector<index_t>& test_sorted, index_t K) {
  require(!test_sorted.empty(), "ndcg_at_k: empty test set");
  double dcg = 0.0;
  for (std::size_t r = 0; r < topk_items.size(); ++r)
    if (std::binary_search(test_sorted.begin(), test_sorted.end(), topk_items[r]))
      dcg += 1.0 / std::log2(static_cast<double>(r + 2));
  const std::size_t ideal = std::min(static_cast<std::size_t>(K), test_sorted.size());
  double idcg = 0.0;
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r + 2));
  return dcg / idcg;
}

struct EvalResult {
  std::map<int, KMetrics> at;
  index_t num_users = 0;
};

// Full-ranking evaluation: for every user with a nonempty split set, ranks
// all items outside the user's training set and averages Recall@K / NDCG@K
// uniformly over those users. K is clamped per user when fewer candidates
// than K remain.
inline EvalResult evaluate(const PropagatedEmbeddings& emb, const InteractionDataset& ds,
                           EvalSplit split, std::span<const int> Ks) {
  require(!Ks.empty(), "evaluate: no K values");
  const auto& pairs = split == EvalSplit::valid ? ds.valid_pairs : ds.test_pairs;
  std::vector<std::vector<index_t>> eval_items(static_cast<std::size_t>(ds.num_users));
  for (const auto& [u, i] : pairs) eval_items[static_cast<std::size_t>(u)].push_back(i);

  int kmax = 0;
  for (int k : Ks) {
    require(k >= 1, "evaluate: K must be >= 1");
    kmax = std::max(kmax, k);
  }

  EvalResult res;
  std::map<int, KMetrics> sums;
  for (int k : Ks) sums[k] = {};

  std::vector<double> scores;
  std::vector<index_t> candidates;
  std::vector<index_t> ranked;
  for (index_t u = 0; u < ds.num_users; ++u) {
    std::vector<index_t>& test = eval_items[static_cast<std::size_t>(u)];
    if (test.empty()) continue;
    std::sort(test.begin(), test.end());
    const auto& mask = ds.user_train_items[static_cast<std::size_t>(u)];
    const index_t available = ds.num_items - static_cast<index_t>(mask.size());
    const index_t k_eff = std::min<index_t>(kmax, available);
    detail::topk_into(emb, u, k_eff, mask, scores, candidates, ranked);
    for (int k : Ks) {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
      std::span<const index_t> prefix(ranked.data(), take);
      sums[k].recall += recall_at_k(prefix, test);
      sums[k].ndcg += ndcg_at_k(prefix, test, static_cast<index_t>(k));
    }
    ++res.num_users;
  }
  if (res.num_users == 0) throw std::runtime_error("evaluate: no users with eval items");
  for (int k : Ks)
    res.at[k] = {sums[k].recall / static_cast<double>(res.num_users),
                 sums[k].ndcg / static_cast<double>(res.num_users)};
  return res;
}

// One row per epoch as produced by the trainer; eval fields are present
// only for epochs where validation ran.
struct EpochRow {
  int epoch = 0;
  double mean_loss = 0.0;
  bool has_eval = false;
  KMetrics at10;
  KMetrics at20;
  double seconds = 0.0;
};

struct MetricsReport {
  std::vector<EpochRow> rows;
  // Epoch of the best validation Recall@20 (ties to the earliest); 0 when
  // no evaluation ever ran.
  int best_epoch = 0;
  KMetrics best_at10;
  KMetrics best_at20;
  double total_seconds = 0.0;
  std::string config_echo;
};

}  // namespace cfrank
