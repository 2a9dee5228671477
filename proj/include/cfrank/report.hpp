#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include "cfrank/dataset_io.hpp"
#include "cfrank/evaluator.hpp"
#include "cfrank/trainer.hpp"

namespace cfrank {

inline std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Per-epoch CSV; eval columns stay empty for epochs without evaluation.
inline std::string metrics_csv(const MetricsReport& report) {
  std::string out = "epoch,loss,recall@10,ndcg@10,recall@20,ndcg@20,seconds\n";
  for (const EpochRow& row : report.rows) {
    out += std::to_string(row.epoch);
    out += ',';
    out += format_metric(row.mean_loss);
    out += ',';
    if (row.has_eval) {
      out += format_metric(row.at10.recall);
      out += ',';
      out += format_metric(row.at10.ndcg);
      out += ',';
      out += format_metric(row.at20.recall);
      out += ',';
      out += format_metric(row.at20.ndcg);
    } else {
      out += ",,,";
    }
    out += ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", row.seconds);
    out += buf;
    out += '\n';
  }
  return out;
}

inline void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  atomic_write_file(path, metrics_csv(report));
}

// Flat key=value echo of every resolved training knob; the same format the
// CLI accepts back through --config.
inline std::string config_echo(const TrainConfig& cfg) {
  std::string out;
  out += std::string("loss = ") + to_string(cfg.loss) + "\n";
  out += "negatives = " + std::to_string(cfg.num_neg) + "\n";
  out += "margin = " + format_full(cfg.margin) + "\n";
  out += "dim = " + std::to_string(cfg.dim) + "\n";
  out += "layers = " + std::to_string(cfg.num_layers) + "\n";
  out += "lr = " + format_full(cfg.lr) + "\n";
  out += "batch = " + std::to_string(cfg.batch_size) + "\n";
  out += "epochs = " + std::to_string(cfg.max_epochs) + "\n";
  out += "patience = " + std::to_string(cfg.patience) + "\n";
  out += "weight-decay = " + format_full(cfg.weight_decay) + "\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += std::string("optimizer = ") + to_string(cfg.optimizer) + "\n";
  out += "eval-every = " + std::to_string(cfg.eval_every) + "\n";
  out += "init-scale = " + format_full(cfg.init_scale) + "\n";
  out += std::string("propagation = ") + to_string(cfg.propagation) + "\n";
  out += std::string("timing = ") + (cfg.timing ? "wall" : "off") + "\n";
  return out;
}

// FNV-1a over the canonical echo; logged so runs can be matched to their
// exact configuration.
inline std::uint64_t config_hash(const std::string& echo) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : echo) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string train_summary(const MetricsReport& report) {
  std::string out;
  out += "epochs_run = " + std::to_string(report.rows.size()) + "\n";
  out += "converged_epoch = " + std::to_string(report.best_epoch) + "\n";
  out += "best_recall@10 = " + format_full(report.best_at10.recall) + "\n";
  out += "best_ndcg@10 = " + format_full(report.best_at10.ndcg) + "\n";
  out += "best_recall@20 = " + format_full(report.best_at20.recall) + "\n";
  out += "best_ndcg@20 = " + format_full(report.best_at20.ndcg) + "\n";
  const double per_epoch =
      report.rows.empty() ? 0.0 : report.total_seconds / static_cast<double>(report.rows.size());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "seconds_per_epoch = %.3f\n", per_epoch);
  out += buf;
  std::snprintf(buf, sizeof(buf), "total_seconds = %.3f\n", report.total_seconds);
  out += buf;
  return out;
}

}  // namespace cfrank
