#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bgae/graph.hpp"

namespace bgae {

// ---------------------------------------------------------------------------
// Link prediction
// ---------------------------------------------------------------------------

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Labels are 0/1; both classes must be present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// sum_k (R_k - R_{k-1}) P_k over the ranking by descending score. Tied
/// scores keep their input order (stable sort).
double average_precision(std::span<const double> scores, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Clustering
// ---------------------------------------------------------------------------

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  /// Stop when the summed squared centroid shift falls below this.
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centroids;  // k x d
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd iterations from k-means++ seeds; best restart by inertia (ties to
/// the lowest restart index). Restart r uses seed + r.
KMeansResult kmeans(const Matrix& points, int k, const KMeansOptions& options = {});

/// Row -> column assignment maximizing the summed weight of a rectangular
/// matrix; unmatched rows (more rows than columns) get -1.
std::vector<int> max_weight_matching(const Matrix& weights);

/// Best one-to-one mapping of cluster ids onto class ids.
double clustering_accuracy(std::span<const int> predicted, std::span<const int> truth);
/// Mutual information normalized by the arithmetic mean of the entropies.
double normalized_mutual_information(std::span<const int> predicted, std::span<const int> truth);
double adjusted_rand_index(std::span<const int> predicted, std::span<const int> truth);

struct ClusteringScores {
  double accuracy = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

ClusteringScores clustering_metrics(std::span<const int> predicted, std::span<const int> truth);

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

struct LogisticOptions {
  /// Objective: sum_i CE_i + (l2 / 2) * ||W||^2 (the bias is not penalized).
  double l2 = 1.0;
  /// Converged when the max-norm of the gradient drops below this.
  double tolerance = 1e-6;
  int max_iterations = 500;
  int history = 10;
};

struct LogisticModel {
  Matrix weights;  // d x C
  Vector bias;     // C
  bool converged = false;
  double gradient_norm = 0.0;
  int iterations = 0;

  std::vector<int> predict(const Matrix& x) const;
};

/// Multinomial logistic regression fitted by L-BFGS.
LogisticModel fit_logistic(const Matrix& x, std::span<const int> labels, int num_classes,
                           const LogisticOptions& options = {});

std::vector<int> logistic_head(const Matrix& train_x, std::span<const int> train_y,
                               const Matrix& eval_x, int num_classes,
                               const LogisticOptions& options = {});

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// ---------------------------------------------------------------------------

struct MetricsReport {
  std::string task;
  std::map<std::string, double> metrics;
  std::string dataset;
  std::uint64_t seed = 0;
  std::string config_hash;
  double wall_seconds = 0.0;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
};

}  // namespace bgae
