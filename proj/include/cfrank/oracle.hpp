#pragma once

// Brute-force references used by tests and the gradcheck command. Nothing
// here depends on the modules these functions check; the training and
// evaluation paths never include this header.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cfrank/common.hpp"

namespace cfrank::oracle {

// Cross-entropy over the full item universe: -log softmax(scores)[pos].
inline double full_softmax_ce(std::span<const double> all_scores, std::size_t pos_index) {
  if (all_scores.size() < 2) throw std::invalid_argument("full_softmax_ce: need >= 2 items");
  if (pos_index >= all_scores.size())
    throw std::invalid_argument("full_softmax_ce: pos_index out of range");
  double m = all_scores[0];
  for (double s : all_scores) m = std::max(m, s);
  double sum = 0.0;
  for (double s : all_scores) sum += std::exp(s - m);
  return m + std::log(sum) - all_scores[pos_index];
}

// Central finite differences, one coordinate at a time.
inline std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> point,
    double h = 1e-6) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + h;
    const double fp = f(x);
    x[k] = saved - h;
    const double fm = f(x);
    x[k] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("fd_gradient: non-finite function value");
    grad[k] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Mean of powers of the dense symmetric-normalized bipartite matrix applied
// to stacked embeddings. Degrees are recounted here from the raw pair list.
// Capped at 100 nodes total.
inline std::pair<std::vector<double>, std::vector<double>> dense_propagate(
    std::span<const double> user_emb, std::span<const double> item_emb, index_t num_users,
    index_t num_items, index_t dim, const std::vector<std::pair<index_t, index_t>>& train_pairs,
    index_t K) {
  const std::size_t n = static_cast<std::size_t>(num_users) + static_cast<std::size_t>(num_items);
  if (n > 100) throw std::invalid_argument("dense_propagate: more than 100 nodes");
  const std::size_t d = static_cast<std::size_t>(dim);

  std::vector<double> deg_u(static_cast<std::size_t>(num_users), 0.0);
  std::vector<double> deg_i(static_cast<std::size_t>(num_items), 0.0);
  for (const auto& [u, i] : train_pairs) {
    deg_u[static_cast<std::size_t>(u)] += 1.0;
    deg_i[static_cast<std::size_t>(i)] += 1.0;
  }
  std::vector<double> A(n * n, 0.0);
  for (const auto& [u, i] : train_pairs) {
    const double w =
        1.0 / std::sqrt(deg_u[static_cast<std::size_t>(u)] * deg_i[static_cast<std::size_t>(i)]);
    const std::size_t r = static_cast<std::size_t>(u);
    const std::size_t c = static_cast<std::size_t>(num_users) + static_cast<std::size_t>(i);
    A[r * n + c] = w;
    A[c * n + r] = w;
  }

  std::vector<double> cur(n * d, 0.0);
  std::copy(user_emb.begin(), user_emb.end(), cur.begin());
  std::copy(item_emb.begin(), item_emb.end(),
            cur.begin() + static_cast<std::size_t>(num_users) * d);
  std::vector<double> acc = cur;
  std::vector<double> next(n * d, 0.0);
  for (index_t k = 1; k <= K; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double a = A[r * n + c];
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) next[r * d + j] += a * cur[c * d + j];
      }
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += next[j];
    std::swap(cur, next);
  }
  const double inv = 1.0 / static_cast<double>(K + 1);
  for (double& v : acc) v *= inv;

  std::vector<double> out_user(acc.begin(), acc.begin() + static_cast<std::size_t>(num_users) * d);
  std::vector<double> out_item(acc.begin() + static_cast<std::size_t>(num_users) * d, acc.end());
  return {std::move(out_user), std::move(out_item)};
}

// Full sort of all unmasked items by (score desc, index asc).
inline std::vector<index_t> brute_force_topk(std::span<const double> scores,
                                             const std::vector<index_t>& mask_sorted, index_t K) {
  std::vector<index_t> idx;
  for (index_t i = 0; i < static_cast<index_t>(scores.size()); ++i)
    if (!std::binary_search(mask_sorted.begin(), mask_sorted.end(), i)) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](index_t a, index_t b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  if (static_cast<std::size_t>(K) < idx.size()) idx.resize(static_cast<std::size_t>(K));
  return idx;
}

// Recall/NDCG for one user straight from the definitions, over the
// full-sorted ranking.
struct UserMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
};

inline UserMetrics brute_force_user_metrics(std::span<const double> scores,
                                            const std::vector<index_t>& mask_sorted,
                                            const std::vector<index_t>& test_sorted, index_t K) {
  const std::vector<index_t> ranked = brute_force_topk(scores, mask_sorted, K);
  std::size_t hits = 0;
  double dcg = 0.0;
  for (std::size_t r = 0; r < ranked.size(); ++r)
    if (std::binary_search(test_sorted.begin(), test_sorted.end(), ranked[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r + 2));
    }
  double idcg = 0.0;
  const std::size_t ideal = std::min(static_cast<std::size_t>(K), test_sorted.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r + 2));
  UserMetrics m;
  m.recall = static_cast<double>(hits) / static_cast<double>(test_sorted.size());
  m.ndcg = dcg / idcg;
  return m;
}

}  // namespace cfrank::oracle
