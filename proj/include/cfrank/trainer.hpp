#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "cfrank/backbone.hpp"
#include "cfrank/evaluator.hpp"
#include "cfrank/loss.hpp"
#include "cfrank/sampler.hpp"

namespace cfrank {

enum class Optimizer { adam, sgd };
enum class PropagationMode { exact, epoch_cache };

inline const char* to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }
inline const char* to_string(PropagationMode m) {
  return m == PropagationMode::exact ? "exact" : "epoch-cache";
}

struct TrainConfig {
  LossKind loss = LossKind::ssm;
  index_t num_neg = 64;       // forced to 1 for bpr
  double margin = 5.0;        // simce only
  index_t dim = 64;
  index_t num_layers = 0;     // 0 = plain matrix factorization
  double lr = 1e-4;
  index_t batch_size = 1024;
  int max_epochs = 100;
  int patience = 10;          // evaluations without improvement before stopping
  double weight_decay = 1e-4;
  std::uint64_t seed = 42;
  Optimizer optimizer = Optimizer::adam;
  int eval_every = 1;
  double init_scale = 0.01;
  // epoch_cache propagates once per epoch and reuses stale final embeddings
  // within it; gradients are then approximate.
  PropagationMode propagation = PropagationMode::exact;
  // When false, all reported epoch timings are 0.0 so repeated runs emit
  // byte-identical reports.
  bool timing = true;

  void validate() const {
    require(lr > 0, "TrainConfig: lr must be positive");
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    require(patience >= 1, "TrainConfig: patience must be >= 1");
    require(max_epochs >= 0, "TrainConfig: max_epochs must be >= 0");
    require(eval_every >= 1, "TrainConfig: eval_every must be >= 1");
    require(dim > 0, "TrainConfig: dim must be positive");
    require(num_layers >= 0, "TrainConfig: num_layers must be >= 0");
    require(num_neg >= 1, "TrainConfig: num_neg must be >= 1");
    require(loss != LossKind::bpr || num_neg == 1, "TrainConfig: bpr requires num_neg == 1");
    require(weight_decay >= 0, "TrainConfig: weight_decay must be >= 0");
    require(std::isfinite(margin), "TrainConfig: margin must be finite");
    require(init_scale > 0, "TrainConfig: init_scale must be positive");
  }
};

// Adam moment accumulators shaped like the embedding matrices. Rows keep
// stale moments until they next receive gradient (lazy update).
struct OptimizerState {
  RowMatrix m_user, v_user, m_item, v_item;
  std::int64_t step = 0;

  static OptimizerState like(const EmbeddingState& st) {
    OptimizerState s;
    s.m_user = RowMatrix(st.num_users, st.dim);
    s.v_user = RowMatrix(st.num_users, st.dim);
    s.m_item = RowMatrix(st.num_items, st.dim);
    s.v_item = RowMatrix(st.num_items, st.dim);
    return s;
  }
};

namespace detail {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

inline void adam_update_row(std::span<double> param, std::span<const double> grad,
                            std::span<double> m, std::span<double> v, double lr,
                            double weight_decay, double bc1, double bc2) {
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad[k] + weight_decay * param[k];
    m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g;
    v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g * g;
    param[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + kAdamEps);
  }
}

inline void sgd_update_row(std::span<double> param, std::span<const double> grad, double lr,
                           double weight_decay) {
  for (std::size_t k = 0; k < param.size(); ++k)
    param[k] -= lr * (grad[k] + weight_decay * param[k]);
}

inline bool row_is_zero(std::span<const double> r) {
  for (double v : r)
    if (v != 0.0) return false;
  return true;
}

}  // namespace detail

// Bias-corrected Adam over the rows touched by this batch; untouched rows
// (parameters, moments) are left as-is. The step counter advances once per
// call.
inline void adam_step(EmbeddingState& state, const SparseRowGrad& grad_user,
                      const SparseRowGrad& grad_item, OptimizerState& opt, double lr,
                      double weight_decay) {
  ++opt.step;
  const double bc1 = 1.0 - std::pow(detail::kAdamBeta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(detail::kAdamBeta2, static_cast<double>(opt.step));
  for (index_t r : grad_user.touched())
    detail::adam_update_row(state.user_emb.row(r), grad_user.row_of(r), opt.m_user.row(r),
                            opt.v_user.row(r), lr, weight_decay, bc1, bc2);
  for (index_t r : grad_item.touched())
    detail::adam_update_row(state.item_emb.row(r), grad_item.row_of(r), opt.m_item.row(r),
                            opt.v_item.row(r), lr, weight_decay, bc1, bc2);
}

// Dense-gradient variant (used after graph backpropagation); rows whose
// gradient is identically zero are untouched.
inline void adam_step(EmbeddingState& state, const RowMatrix& grad_user,
                      const RowMatrix& grad_item, OptimizerState& opt, double lr,
                      double weight_decay) {
  ++opt.step;
  const double bc1 = 1.0 - std::pow(detail::kAdamBeta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(detail::kAdamBeta2, static_cast<double>(opt.step));
  for (index_t r = 0; r < grad_user.rows(); ++r) {
    const auto g = grad_user.row(r);
    if (detail::row_is_zero(g)) continue;
    detail::adam_update_row(state.user_emb.row(r), g, opt.m_user.row(r), opt.v_user.row(r), lr,
                            weight_decay, bc1, bc2);
  }
  for (index_t r = 0; r < grad_item.rows(); ++r) {
    const auto g = grad_item.row(r);
    if (detail::row_is_zero(g)) continue;
    detail::adam_update_row(state.item_emb.row(r), g, opt.m_item.row(r), opt.v_item.row(r), lr,
                            weight_decay, bc1, bc2);
  }
}

inline void sgd_step(EmbeddingState& state, const SparseRowGrad& grad_user,
                     const SparseRowGrad& grad_item, double lr, double weight_decay) {
  for (index_t r : grad_user.touched())
    detail::sgd_update_row(state.user_emb.row(r), grad_user.row_of(r), lr, weight_decay);
  for (index_t r : grad_item.touched())
    detail::sgd_update_row(state.item_emb.row(r), grad_item.row_of(r), lr, weight_decay);
}

inline void sgd_step(EmbeddingState& state, const RowMatrix& grad_user,
                     const RowMatrix& grad_item, double lr, double weight_decay) {
  for (index_t r = 0; r < grad_user.rows(); ++r) {
    const auto g = grad_user.row(r);
    if (!detail::row_is_zero(g)) detail::sgd_update_row(state.user_emb.row(r), g, lr, weight_decay);
  }
  for (index_t r = 0; r < grad_item.rows(); ++r) {
    const auto g = grad_item.row(r);
    if (!detail::row_is_zero(g)) detail::sgd_update_row(state.item_emb.row(r), g, lr, weight_decay);
  }
}

struct TrainResult {
  EmbeddingState best_state;
  MetricsReport report;
};

namespace detail {

inline LossGrad eval_loss(const TrainConfig& cfg, std::span<const double> pos,
                          std::span<const double> neg) {
  switch (cfg.loss) {
    case LossKind::bpr: return bpr(pos, neg);
    case LossKind::ssm: return ssm(pos, neg, cfg.num_neg);
    case LossKind::simce: return simce(pos, neg, cfg.num_neg, cfg.margin);
  }
  throw std::logic_error("unreachable loss kind");
}

[[noreturn]] inline void abort_non_finite(const char* what, int epoch, std::size_t batch_idx) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "non-finite %s at epoch %d batch %zu", what, epoch, batch_idx);
  throw std::runtime_error(buf);
}

}  // namespace detail

// Full optimization loop: per batch propagate -> score -> loss -> chain ->
// backpropagate -> parameter update, with validation Recall@20 early
// stopping. Returns the best-validation parameters (final parameters when
// no evaluation ever ran) and the per-epoch report.
inline TrainResult train(const InteractionDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  const NormalizedAdjacency adj = build_adjacency(ds);
  EmbeddingState state =
      init_embeddings(ds.num_users, ds.num_items, cfg.dim,
                      seed_mix(cfg.seed, seed_stream::kInit), cfg.init_scale);
  OptimizerState opt = OptimizerState::like(state);
  SparseRowGrad grad_user(ds.num_users, cfg.dim);
  SparseRowGrad grad_item(ds.num_items, cfg.dim);
  RowMatrix dense_user, dense_item;
  if (cfg.num_layers > 0) {
    dense_user = RowMatrix(ds.num_users, cfg.dim);
    dense_item = RowMatrix(ds.num_items, cfg.dim);
  }

  const bool has_eval_users = !ds.valid_pairs.empty();

  TrainResult result;
  MetricsReport& report = result.report;
  double best_r20 = -1.0;
  int evals_without_improvement = 0;
  const std::uint64_t sampler_seed = seed_mix(cfg.seed, seed_stream::kSampler);
  const int Ks[2] = {10, 20};

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    PropagatedEmbeddings prop;
    if (cfg.propagation == PropagationMode::epoch_cache)
      prop = propagate(state, adj, cfg.num_layers);

    EpochSampler sampler(ds, cfg.batch_size, cfg.num_neg, sampler_seed,
                         static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    std::size_t sample_count = 0;
    std::size_t batch_idx = 0;
    while (auto batch = sampler.next()) {
      if (cfg.propagation == PropagationMode::exact)
        prop = propagate(state, adj, cfg.num_layers);
      const std::vector<double> pos_scores = score_batch(prop, batch->users, batch->pos_items);
      const std::vector<double> neg_scores =
          score_batch(prop, batch->users, batch->neg_items, cfg.num_neg);
      const LossGrad lg = detail::eval_loss(cfg, pos_scores, neg_scores);
      if (!std::isfinite(lg.loss)) detail::abort_non_finite("loss", epoch, batch_idx);
      chain_to_embeddings(lg, *batch, prop, grad_user, grad_item);
      if (!grad_user.all_finite() || !grad_item.all_finite())
        detail::abort_non_finite("gradient", epoch, batch_idx);

      if (cfg.num_layers == 0) {
        if (cfg.optimizer == Optimizer::adam)
          adam_step(state, grad_user, grad_item, opt, cfg.lr, cfg.weight_decay);
        else
          sgd_step(state, grad_user, grad_item, cfg.lr, cfg.weight_decay);
      } else {
        dense_user.set_zero();
        dense_item.set_zero();
        for (index_t r : grad_user.touched()) {
          auto dst = dense_user.row(r);
          auto src = grad_user.row_of(r);
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = src[k];
        }
        for (index_t r : grad_item.touched()) {
          auto dst = dense_item.row(r);
          auto src = grad_item.row_of(r);
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = src[k];
        }
        auto [gu, gi] = backpropagate(dense_user, dense_item, adj, cfg.num_layers);
        if (cfg.optimizer == Optimizer::adam)
          adam_step(state, gu, gi, opt, cfg.lr, cfg.weight_decay);
        else
          sgd_step(state, gu, gi, cfg.lr, cfg.weight_decay);
      }
      loss_sum += lg.loss * static_cast<double>(batch->size());
      sample_count += static_cast<std::size_t>(batch->size());
      ++batch_idx;
    }

    EpochRow row;
    row.epoch = epoch;
    row.mean_loss = sample_count > 0 ? loss_sum / static_cast<double>(sample_count) : 0.0;

    if (has_eval_users && epoch % cfg.eval_every == 0) {
      const PropagatedEmbeddings eval_prop = propagate(state, adj, cfg.num_layers);
      const EvalResult ev = evaluate(eval_prop, ds, EvalSplit::valid, Ks);
      row.has_eval = true;
      row.at10 = ev.at.at(10);
      row.at20 = ev.at.at(20);
      if (ev.at.at(20).recall > best_r20) {
        best_r20 = ev.at.at(20).recall;
        report.best_epoch = epoch;
        report.best_at10 = ev.at.at(10);
        report.best_at20 = ev.at.at(20);
        result.best_state = state;
        evals_without_improvement = 0;
      } else {
        ++evals_without_improvement;
      }
    }

    if (cfg.timing) {
      const auto t1 = std::chrono::steady_clock::now();
      row.seconds = std::chrono::duration<double>(t1 - t0).count();
    }
    report.total_seconds += row.seconds;
    report.rows.push_back(row);

    if (evals_without_improvement >= cfg.patience) break;
  }

  if (report.best_epoch == 0) result.best_state = state;
  return result;
}

}  // namespace cfrank
