#pragma once

// End-to-end gradient verification on a small random instance: analytic
// chain (loss -> scores -> propagation -> embeddings) against central
// finite differences. Used by the gradcheck command and the test suites.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "cfrank/backbone.hpp"
#include "cfrank/loss.hpp"
#include "cfrank/oracle.hpp"
#include "cfrank/sampler.hpp"

namespace cfrank {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t num_params = 0;
  bool pass = false;
};

namespace detail {

inline InteractionDataset tiny_instance(std::uint64_t seed, index_t num_users = 8,
                                        index_t num_items = 9) {
  InteractionDataset ds;
  ds.num_users = num_users;
  ds.num_items = num_items;
  ds.user_train_items.resize(static_cast<std::size_t>(num_users));
  std::mt19937_64 rng(seed_mix(seed, 0xA11CE));
  std::uniform_int_distribution<index_t> count_dist(3, 5);
  for (index_t u = 0; u < num_users; ++u) {
    std::vector<index_t> all(static_cast<std::size_t>(num_items));
    std::iota(all.begin(), all.end(), index_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(count_dist(rng)));
    std::sort(all.begin(), all.end());
    for (index_t i : all) ds.train_pairs.emplace_back(u, i);
    ds.user_train_items[static_cast<std::size_t>(u)] = std::move(all);
  }
  for (index_t u = 0; u < num_users; ++u) ds.user_ids.push_back("u" + std::to_string(u));
  for (index_t i = 0; i < num_items; ++i) ds.item_ids.push_back("i" + std::to_string(i));
  return ds;
}

// For simce the loss is only piecewise smooth; reject draws where a hinge
// or an argmax sits within `gap` of its switching point, where finite
// differences would straddle the kink.
inline bool simce_draw_is_smooth(const LossGrad& g, std::span<const double> pos,
                                 std::span<const double> neg, index_t num_neg, double margin,
                                 double gap) {
  const std::size_t N = static_cast<std::size_t>(num_neg);
  for (std::size_t b = 0; b < pos.size(); ++b) {
    double top1 = -1e300, top2 = -1e300;
    for (std::size_t j = 0; j < N; ++j) {
      const double s = neg[b * N + j];
      if (s > top1) {
        top2 = top1;
        top1 = s;
      } else if (s > top2) {
        top2 = s;
      }
    }
    if (N > 1 && top1 - top2 < gap) return false;
    if (std::abs(margin - pos[b] + top1) < gap) return false;
  }
  (void)g;
  return true;
}

}  // namespace detail

inline GradCheckResult run_gradcheck(LossKind loss, index_t num_layers, std::uint64_t seed,
                                     double tolerance = 1e-4, double margin = 5.0) {
  const InteractionDataset ds = detail::tiny_instance(seed);
  const NormalizedAdjacency adj = build_adjacency(ds);
  const index_t dim = 4;
  const index_t num_neg = loss == LossKind::bpr ? 1 : 3;
  const EmbeddingState state =
      init_embeddings(ds.num_users, ds.num_items, dim, seed_mix(seed, 0xBEEF), 0.5);

  TrainBatch batch;
  for (std::uint64_t epoch = 0; epoch < 16; ++epoch) {
    EpochSampler sampler(ds, 6, num_neg, seed, epoch);
    batch = *sampler.next();
    if (loss != LossKind::simce) break;
    const PropagatedEmbeddings prop = propagate(state, adj, num_layers);
    const auto pos = score_batch(prop, batch.users, batch.pos_items);
    const auto neg = score_batch(prop, batch.users, batch.neg_items, num_neg);
    const LossGrad g = simce(pos, neg, num_neg, margin);
    if (detail::simce_draw_is_smooth(g, pos, neg, num_neg, margin, 1e-3)) break;
  }

  const std::size_t nu = state.user_emb.size();
  const std::size_t ni = state.item_emb.size();
  std::vector<double> point(nu + ni);
  std::copy(state.user_emb.data(), state.user_emb.data() + nu, point.begin());
  std::copy(state.item_emb.data(), state.item_emb.data() + ni, point.begin() + nu);

  auto loss_at = [&](std::span<const double> x) {
    EmbeddingState st;
    st.num_users = ds.num_users;
    st.num_items = ds.num_items;
    st.dim = dim;
    st.user_emb = RowMatrix(ds.num_users, dim);
    st.item_emb = RowMatrix(ds.num_items, dim);
    std::copy(x.begin(), x.begin() + nu, st.user_emb.data());
    std::copy(x.begin() + nu, x.end(), st.item_emb.data());
    const PropagatedEmbeddings prop = propagate(st, adj, num_layers);
    const auto pos = score_batch(prop, batch.users, batch.pos_items);
    const auto neg = score_batch(prop, batch.users, batch.neg_items, num_neg);
    switch (loss) {
      case LossKind::bpr: return bpr(pos, neg).loss;
      case LossKind::ssm: return ssm(pos, neg, num_neg).loss;
      case LossKind::simce: return simce(pos, neg, num_neg, margin).loss;
    }
    return 0.0;
  };

  // Analytic path.
  const PropagatedEmbeddings prop = propagate(state, adj, num_layers);
  const auto pos = score_batch(prop, batch.users, batch.pos_items);
  const auto neg = score_batch(prop, batch.users, batch.neg_items, num_neg);
  LossGrad lg;
  switch (loss) {
    case LossKind::bpr: lg = bpr(pos, neg); break;
    case LossKind::ssm: lg = ssm(pos, neg, num_neg); break;
    case LossKind::simce: lg = simce(pos, neg, num_neg, margin); break;
  }
  SparseRowGrad du(ds.num_users, dim), di(ds.num_items, dim);
  chain_to_embeddings(lg, batch, prop, du, di);
  RowMatrix gfu(ds.num_users, dim), gfi(ds.num_items, dim);
  for (index_t r : du.touched()) {
    auto dst = gfu.row(r);
    auto src = du.row_of(r);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  for (index_t r : di.touched()) {
    auto dst = gfi.row(r);
    auto src = di.row_of(r);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  const auto [gu, gi] = backpropagate(gfu, gfi, adj, num_layers);
  std::vector<double> analytic(nu + ni);
  std::copy(gu.data(), gu.data() + nu, analytic.begin());
  std::copy(gi.data(), gi.data() + ni, analytic.begin() + nu);

  const std::vector<double> numeric = oracle::fd_gradient(loss_at, point, 1e-6);

  GradCheckResult res;
  res.num_params = point.size();
  for (std::size_t k = 0; k < point.size(); ++k) {
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric[k]), 1e-3});
    res.max_rel_err = std::max(res.max_rel_err, std::abs(analytic[k] - numeric[k]) / denom);
  }
  res.pass = res.max_rel_err < tolerance;
  return res;
}

}  // namespace cfrank
