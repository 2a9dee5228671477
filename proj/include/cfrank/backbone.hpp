#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "cfrank/dataset.hpp"
#include "cfrank/matrix.hpp"

namespace cfrank {

// Trainable parameters: one embedding row per user and per item.
struct EmbeddingState {
  index_t num_users = 0;
  index_t num_items = 0;
  index_t dim = 0;
  RowMatrix user_emb;
  RowMatrix item_emb;
};

// Output of graph propagation; with num_layers == 0 the final matrices equal
// the input embeddings exactly (the plain matrix-factorization scorer).
struct PropagatedEmbeddings {
  index_t num_layers = 0;
  RowMatrix final_user;
  RowMatrix final_item;
};

inline EmbeddingState init_embeddings(index_t num_users, index_t num_items, index_t dim,
                                      std::uint64_t seed, double scale = 0.01) {
  require(dim > 0, "init_embeddings: dim must be positive");
  require(scale > 0, "init_embeddings: scale must be positive");
  require(num_users >= 0 && num_items >= 0, "init_embeddings: negative counts");
  EmbeddingState st;
  st.num_users = num_users;
  st.num_items = num_items;
  st.dim = dim;
  st.user_emb = RowMatrix(num_users, dim);
  st.item_emb = RowMatrix(num_items, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  for (std::size_t k = 0; k < st.user_emb.size(); ++k) st.user_emb.data()[k] = gauss(rng);
  for (std::size_t k = 0; k < st.item_emb.size(); ++k) st.item_emb.data()[k] = gauss(rng);
  return st;
}

namespace detail {

// Mean over layers 0..K of the layer recurrence
//   u^(k+1)[u] = sum_{i in N(u)} w(u,i) * i^(k)[i]
//   i^(k+1)[i] = sum_{u in N(i)} w(u,i) * u^(k)[u]
// The stacked edge operator is symmetric (the same w(u,i) appears in both
// row sets), so this kernel is also its own adjoint.
inline std::pair<RowMatrix, RowMatrix> mean_of_layers(const RowMatrix& user0,
                                                      const RowMatrix& item0,
                                                      const NormalizedAdjacency& adj, index_t K) {
  const index_t d = user0.cols();
  RowMatrix acc_u = user0;
  RowMatrix acc_i = item0;
  RowMatrix cur_u = user0;
  RowMatrix cur_i = item0;
  RowMatrix next_u(adj.num_users, d);
  RowMatrix next_i(adj.num_items, d);
  for (index_t k = 1; k <= K; ++k) {
    next_u.set_zero();
    next_i.set_zero();
    for (index_t u = 0; u < adj.num_users; ++u) {
      auto out = next_u.row(u);
      for (std::int64_t e = adj.user_ptr[static_cast<std::size_t>(u)];
           e < adj.user_ptr[static_cast<std::size_t>(u) + 1]; ++e)
        axpy(out, adj.user_weight[static_cast<std::size_t>(e)],
             cur_i.row(adj.user_adj[static_cast<std::size_t>(e)]));
    }
    for (index_t i = 0; i < adj.num_items; ++i) {
      auto out = next_i.row(i);
      for (std::int64_t e = adj.item_ptr[static_cast<std::size_t>(i)];
           e < adj.item_ptr[static_cast<std::size_t>(i) + 1]; ++e)
        axpy(out, adj.item_weight[static_cast<std::size_t>(e)],
             cur_u.row(adj.item_adj[static_cast<std::size_t>(e)]));
    }
    for (std::size_t k2 = 0; k2 < acc_u.size(); ++k2) acc_u.data()[k2] += next_u.data()[k2];
    for (std::size_t k2 = 0; k2 < acc_i.size(); ++k2) acc_i.data()[k2] += next_i.data()[k2];
    std::swap(cur_u, next_u);
    std::swap(cur_i, next_i);
  }
  const double inv = 1.0 / static_cast<double>(K + 1);
  for (std::size_t k2 = 0; k2 < acc_u.size(); ++k2) acc_u.data()[k2] *= inv;
  for (std::size_t k2 = 0; k2 < acc_i.size(); ++k2) acc_i.data()[k2] *= inv;
  return {std::move(acc_u), std::move(acc_i)};
}

}  // namespace detail

inline PropagatedEmbeddings propagate(const EmbeddingState& state, const NormalizedAdjacency& adj,
                                      index_t K) {
  require(K >= 0, "propagate: negative layer count");
  require(state.num_users == adj.num_users && state.num_items == adj.num_items,
          "propagate: state/adjacency shape mismatch");
  PropagatedEmbeddings out;
  out.num_layers = K;
  auto [fu, fi] = detail::mean_of_layers(state.user_emb, state.item_emb, adj, K);
  out.final_user = std::move(fu);
  out.final_item = std::move(fi);
  return out;
}

// Adjoint of propagate: maps gradients w.r.t. the final embeddings back to
// gradients w.r.t. the input embeddings. Propagation is linear and the edge
// operator symmetric, so the adjoint runs the same recurrence.
inline std::pair<RowMatrix, RowMatrix> backpropagate(const RowMatrix& grad_final_user,
                                                     const RowMatrix& grad_final_item,
                                                     const NormalizedAdjacency& adj, index_t K) {
  require(grad_final_user.rows() == adj.num_users && grad_final_item.rows() == adj.num_items &&
              grad_final_user.cols() == grad_final_item.cols(),
          "backpropagate: shape mismatch");
  return detail::mean_of_layers(grad_final_user, grad_final_item, adj, K);
}

inline double score(const PropagatedEmbeddings& emb, index_t u, index_t i) {
  require(u >= 0 && u < emb.final_user.rows() && i >= 0 && i < emb.final_item.rows(),
          "score: index out of range");
  return dot(emb.final_user.row(u), emb.final_item.row(i));
}

// One score per (users[b], items[b]).
inline std::vector<double> score_batch(const PropagatedEmbeddings& emb,
                                       std::span<const index_t> users,
                                       std::span<const index_t> items) {
  require(users.size() == items.size(), "score_batch: users/items length mismatch");
  std::vector<double> out(users.size());
  for (std::size_t b = 0; b < users.size(); ++b) out[b] = score(emb, users[b], items[b]);
  return out;
}

// Row-major B x num_neg scores for (users[b], items[b*num_neg + j]).
inline std::vector<double> score_batch(const PropagatedEmbeddings& emb,
                                       std::span<const index_t> users,
                                       std::span<const index_t> items, index_t num_neg) {
  require(num_neg >= 1, "score_batch: num_neg must be >= 1");
  require(items.size() == users.size() * static_cast<std::size_t>(num_neg),
          "score_batch: items length must be B*num_neg");
  std::vector<double> out(items.size());
  for (std::size_t b = 0; b < users.size(); ++b)
    for (index_t j = 0; j < num_neg; ++j) {
      const std::size_t at = b * static_cast<std::size_t>(num_neg) + static_cast<std::size_t>(j);
      out[at] = score(emb, users[b], items[at]);
    }
  return out;
}

}  // namespace cfrank
