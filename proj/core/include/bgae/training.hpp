#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "bgae/losses.hpp"
#include "bgae/model.hpp"
#include "bgae/optim.hpp"

namespace bgae {

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-6;
  /// Optional 1/(1 + lr_decay * step) learning-rate schedule; 0 disables it.
  double lr_decay = 0.0;
  int max_epochs = 400;
  int patience = 50;
  std::uint64_t seed = 0;
  AdamConfig adam;

  void validate() const;
};

/// One row of the per-iteration loss log.
struct LossRecord {
  int iteration = 0;
  double bce_a = 0.0;
  double bce_s = 0.0;
  double kl_local = 0.0;
  double kl_diffused = 0.0;
  double cov_diag = 0.0;
  double cov_offdiag = 0.0;
  double total = 0.0;
  /// Validation AUC in link-prediction mode, NaN otherwise.
  double validation = std::numeric_limits<double>::quiet_NaN();
};

struct RunState {
  int epochs_run = 0;
  /// Snapshot with the best recorded validation metric.
  ModelParams params;
  double best_metric = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  bool early_stopped = false;
  std::mt19937_64 rng;
  std::vector<LossRecord> history;
};

struct ValidationEdges {
  std::vector<Edge> positives;
  std::vector<Edge> negatives;
};

/// Inputs of one training run. Views and features are shared, read-only.
struct TrainingData {
  Index num_nodes = 0;
  SparseOperand features;
  /// Normalized adjacency of the training graph (view I).
  SparseOperand local_view;
  /// Sparsified diffusion matrix (view I-bar); also the source of soft BCE targets.
  SparseOperand diffused_view;
  /// Positive edges available for reconstruction.
  std::vector<Edge> train_edges;
  /// Present in link-prediction mode: early stopping tracks validation AUC.
  /// Absent: early stopping tracks the negated training loss.
  std::optional<ValidationEdges> validation;
};

using EpochCallback = std::function<void(const LossRecord&)>;

/// Full-batch training. Each epoch samples fresh negatives (and S pairs),
/// runs both views through the shared encoder, fuses, decodes, and applies
/// one Adam step. The best snapshot is restored at the end. Throws
/// DivergenceError if the loss or a gradient becomes non-finite.
RunState train(const TrainingData& data, ModelParams params, const LossConfig& loss,
               const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Columns: iteration,bce_a,bce_s,kl_local,kl_diffused,cov_diag,cov_offdiag,total
void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);

}  // namespace bgae
