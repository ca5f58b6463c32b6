#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bgae/diffusion.hpp"
#include "bgae/evaluation.hpp"
#include "bgae/losses.hpp"
#include "bgae/model.hpp"
#include "bgae/training.hpp"

namespace bgae {

enum class Task { LinkPrediction, Embedding };

std::string to_string(Task task);
std::string to_string(Variant variant);
std::string to_string(FusionMode mode);
Task parse_task(std::string_view text);
Variant parse_variant(std::string_view text);
FusionMode parse_fusion(std::string_view text);

struct ExperimentConfig {
  std::filesystem::path dataset;
  Task task = Task::LinkPrediction;
  Variant variant = Variant::Bgae;
  FusionMode fusion = FusionMode::Fixed;
  DiffusionConfig diffusion;
  double beta = 1.0;
  double lambda = 5e-3;
  Index edge_batch = 0;
  Index dim = 512;
  TrainConfig train;
  /// GCN renormalization (A + I) for the adjacency view.
  bool encoder_self_loops = true;
  bool row_normalize_features = false;
  SplitFractions split;
  /// Seed of the link-prediction edge split; kept apart from train.seed so
  /// runs with different training seeds share one split.
  std::uint64_t split_seed = 0;
  std::filesystem::path out;

  /// Collects every violation before throwing ValidationError.
  void validate() const;
  LossConfig loss() const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  /// 16 hex digits over the serialized config without the output directory.
  std::string hash() const;
};

/// BGAE_CACHE_DIR, else $XDG_CACHE_HOME/bgae, else ~/.cache/bgae.
std::filesystem::path default_cache_dir();

/// Everything a run needs before training: the bundle, the edge split (link
/// prediction only), and the two propagation matrices of the training graph.
struct PreparedData {
  DatasetBundle bundle;
  std::optional<EdgeSplit> split;
  TrainingData training;
  double approximation_bound = 0.0;
  bool diffusion_cache_hit = false;
  std::filesystem::path diffusion_path;
};

/// Loads the bundle, splits edges when needed, and builds both views. The
/// diffusion matrix is cached on disk keyed by the dataset, the diffusion
/// settings, and the edge set it is computed from.
PreparedData prepare(const ExperimentConfig& config);
PreparedData prepare(const ExperimentConfig& config, const DatasetBundle& bundle);

/// Diffusion of (num_nodes, edges) through the cache in `cache_dir`.
DiffusionMatrix cached_diffusion(Index num_nodes, std::span<const Edge> edges, const DiffusionConfig& config,
                                 const std::string& dataset_id, const std::filesystem::path& cache_dir,
                                 bool* cache_hit = nullptr, std::filesystem::path* path = nullptr);

struct TrainOutcome {
  RunState state;
  double seconds = 0.0;
};

TrainOutcome run_training(const ExperimentConfig& config, const PreparedData& data,
                          const EpochCallback& on_epoch = {});

/// Link prediction: test AUC/AP. Embedding: K-means ACC/NMI/ARI on the fused
/// embedding and logistic-head accuracy on the public split.
MetricsReport evaluate(const ExperimentConfig& config, const PreparedData& data, const ModelParams& params);

/// Writes params.bin/params.json, losses.csv and manifest.json into config.out.
void write_run_artifacts(const ExperimentConfig& config, const PreparedData& data, const TrainOutcome& outcome);

/// Appends one row per report (header written when the file is new).
void append_metrics_csv(const MetricsReport& report, const ExperimentConfig& config,
                        const std::filesystem::path& path);

struct PipelineResult {
  MetricsReport report;
  TrainOutcome training;
  bool diffusion_cache_hit = false;
};

/// prepare -> train -> evaluate, writing all artifacts plus metrics.json and
/// metrics.csv into config.out.
PipelineResult run_pipeline(const ExperimentConfig& config, const EpochCallback& on_epoch = {});

inline const std::vector<double> kDefaultSweepBetas = {0.01, 0.1, 1.0, 10.0, 100.0, 500.0, 1000.0, 10000.0};

struct SweepOptions {
  std::vector<double> betas = kDefaultSweepBetas;
  /// Worker threads; 0 = available cores.
  int workers = 0;
  /// Baseline for the relative columns (the beta of the main tables).
  double reference_beta = 1.0;
  bool link_prediction = true;
  bool embedding = true;
};

struct SweepRow {
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> auc;
  std::optional<double> nmi;
  std::optional<double> accuracy;
  /// Empty on success.
  std::string error;
};

/// One pipeline per beta (and per enabled task) with seed = base seed + index.
/// Failed points keep their error message and the sweep carries on.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepOptions& options,
                                const std::function<void(const std::string&)>& log = {});

/// Columns: beta,auc,nmi,accuracy,auc_rel_pct,nmi_rel_pct,accuracy_rel_pct.
/// Failed rows are left out; relative columns are empty without a baseline.
void write_sweep_csv(const std::vector<SweepRow>& rows, double reference_beta, const std::filesystem::path& path);

}  // namespace bgae
