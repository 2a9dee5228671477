#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cfrank/backbone.hpp"
#include "cfrank/matrix.hpp"
#include "cfrank/sampler.hpp"

namespace cfrank {

enum class LossKind { bpr, ssm, simce };

inline const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::bpr: return "bpr";
    case LossKind::ssm: return "ssm";
    case LossKind::simce: return "simce";
  }
  return "?";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "bpr") return LossKind::bpr;
  if (s == "ssm") return LossKind::ssm;
  if (s == "simce") return LossKind::simce;
  throw std::invalid_argument("unknown loss: " + s);
}

// Batch-mean loss value plus per-sample derivatives w.r.t. the scores.
// d_pos[b] and d_neg[b*num_neg+j] are d(per-sample loss)/d(score); the 1/B
// factor of the mean is applied when chaining into embeddings.
struct LossGrad {
  double loss = 0.0;
  index_t batch = 0;
  index_t num_neg = 0;
  std::vector<double> d_pos;
  std::vector<double> d_neg;
  // Hardest-negative slot per sample (-1 when the hinge is inactive);
  // only populated by simce.
  std::vector<index_t> active_index;
};

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Pairwise ranking loss over one negative per positive:
//   l = -log(eps + sigmoid(s_pos - s_neg))
inline LossGrad bpr(std::span<const double> pos_scores, std::span<const double> neg_scores,
                    double eps = 1e-5) {
  require(pos_scores.size() == neg_scores.size(), "bpr: pos/neg length mismatch");
  require(!pos_scores.empty(), "bpr: empty batch");
  const std::size_t B = pos_scores.size();
  LossGrad g;
  g.batch = static_cast<index_t>(B);
  g.num_neg = 1;
  g.d_pos.resize(B);
  g.d_neg.resize(B);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double x = pos_scores[b] - neg_scores[b];
    const double s = sigmoid(x);
    total += -std::log(eps + s);
    const double dldx = -s * (1.0 - s) / (eps + s);
    g.d_pos[b] = dldx;
    g.d_neg[b] = -dldx;
  }
  g.loss = total / static_cast<double>(B);
  return g;
}

// Sampled softmax cross-entropy over num_neg negatives per positive:
//   l = log(1 + sum_j exp(s_j - s_p))
// evaluated as m + log(exp(-m) + sum_j exp(z_j - m)) with z_j = s_j - s_p
// and m = max(0, max_j z_j), an exact rewrite that cannot overflow.
inline LossGrad ssm(std::span<const double> pos_scores, std::span<const double> neg_scores,
                    index_t num_neg) {
  require(num_neg >= 1, "ssm: num_neg must be >= 1");
  require(!pos_scores.empty(), "ssm: empty batch");
  require(neg_scores.size() == pos_scores.size() * static_cast<std::size_t>(num_neg),
          "ssm: neg_scores must be B*num_neg");
  const std::size_t B = pos_scores.size();
  const std::size_t N = static_cast<std::size_t>(num_neg);
  LossGrad g;
  g.batch = static_cast<index_t>(B);
  g.num_neg = num_neg;
  g.d_pos.resize(B);
  g.d_neg.resize(B * N);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double sp = pos_scores[b];
    const double* neg = &neg_scores[b * N];
    double zmax = neg[0] - sp;
    for (std::size_t j = 1; j < N; ++j) zmax = std::max(zmax, neg[j] - sp);
    const double m = std::max(0.0, zmax);
    double denom = std::exp(-m);
    double* p = &g.d_neg[b * N];
    for (std::size_t j = 0; j < N; ++j) {
      p[j] = std::exp(neg[j] - sp - m);
      denom += p[j];
    }
    total += m + std::log(denom);
    double psum = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      p[j] /= denom;  // softmax weight of negative j
      psum += p[j];
    }
    g.d_pos[b] = -psum;
  }
  g.loss = total / static_cast<double>(B);
  return g;
}

// Hinge on the margin between the positive score and the hardest negative:
//   l = max(margin - s_p + max_j s_j, 0)
// Only the hardest negative (lowest index on ties) receives gradient; at
// l == 0 all gradients are zero.
inline LossGrad simce(std::span<const double> pos_scores, std::span<const double> neg_scores,
                      index_t num_neg, double margin = 5.0) {
  require(num_neg >= 1, "simce: num_neg must be >= 1");
  require(!pos_scores.empty(), "simce: empty batch");
  require(neg_scores.size() == pos_scores.size() * static_cast<std::size_t>(num_neg),
          "simce: neg_scores must be B*num_neg");
  require(std::isfinite(margin), "simce: margin must be finite");
  const std::size_t B = pos_scores.size();
  const std::size_t N = static_cast<std::size_t>(num_neg);
  LossGrad g;
  g.batch = static_cast<index_t>(B);
  g.num_neg = num_neg;
  g.d_pos.assign(B, 0.0);
  g.d_neg.assign(B * N, 0.0);
  g.active_index.assign(B, -1);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double* neg = &neg_scores[b * N];
    std::size_t jstar = 0;
    double m = neg[0];
    for (std::size_t j = 1; j < N; ++j)
      if (neg[j] > m) {
        m = neg[j];
        jstar = j;
      }
    const double hinge = margin - pos_scores[b] + m;
    if (hinge > 0.0) {
      total += hinge;
      g.d_pos[b] = -1.0;
      g.d_neg[b * N + jstar] = 1.0;
      g.active_index[b] = static_cast<index_t>(jstar);
    }
  }
  g.loss = total / static_cast<double>(B);
  return g;
}

// Chain rule through s(u,i) = <f(u), f(i)>: accumulates the gradient of the
// batch-mean loss onto the touched rows of the final embeddings. Repeated
// indices within a batch sum; exact zero derivatives touch nothing.
inline void chain_to_embeddings(const LossGrad& g, const TrainBatch& batch,
                                const PropagatedEmbeddings& emb, SparseRowGrad& d_user,
                                SparseRowGrad& d_item) {
  const std::size_t B = static_cast<std::size_t>(batch.size());
  const std::size_t N = static_cast<std::size_t>(g.num_neg);
  require(g.batch == batch.size(), "chain_to_embeddings: batch size mismatch");
  require(g.num_neg == batch.num_neg, "chain_to_embeddings: num_neg mismatch");
  require(d_user.dim() == emb.final_user.cols() && d_item.dim() == emb.final_item.cols(),
          "chain_to_embeddings: dim mismatch");
  d_user.clear();
  d_item.clear();
  const double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b) {
    const index_t u = batch.users[b];
    const index_t i = batch.pos_items[b];
    const auto fu = emb.final_user.row(u);
    const double dp = g.d_pos[b] * inv_b;
    if (dp != 0.0) {
      axpy(d_user.row(u), dp, emb.final_item.row(i));
      axpy(d_item.row(i), dp, fu);
    }
    for (std::size_t j = 0; j < N; ++j) {
      const double dn = g.d_neg[b * N + j];
      if (dn == 0.0) continue;
      const index_t n = batch.neg_items[b * N + j];
      axpy(d_user.row(u), dn * inv_b, emb.final_item.row(n));
      axpy(d_item.row(n), dn * inv_b, fu);
    }
  }
}

}  // namespace cfrank
