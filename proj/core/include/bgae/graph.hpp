#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bgae {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Undirected node pair stored with u < v.
struct Edge {
  Index u = 0;
  Index v = 0;

  static Edge canonical(Index a, Index b) { return a < b ? Edge{a, b} : Edge{b, a}; }
  auto operator<=>(const Edge&) const = default;
};

/// Membership set over undirected pairs.
class EdgeSet {
 public:
  EdgeSet() = default;
  explicit EdgeSet(std::span<const Edge> edges);

  bool insert(Index a, Index b);
  bool contains(Index a, Index b) const;
  std::size_t size() const noexcept { return keys_.size(); }

 private:
  static std::uint64_t key(Index a, Index b);
  std::unordered_set<std::uint64_t> keys_;
};

struct SplitMasks {
  std::vector<bool> train;
  std::vector<bool> val;
  std::vector<bool> test;

  std::vector<Index> train_ids() const;
  std::vector<Index> val_ids() const;
  std::vector<Index> test_ids() const;
};

/// Immutable attributed graph: undirected edges, sparse N x F features,
/// labels in [0, C) and the public classification split.
class DatasetBundle {
 public:
  /// Validates every invariant; throws ValidationError listing all violations.
  static DatasetBundle create(Index num_nodes, Index num_classes, std::vector<Edge> edges,
                              SparseMatrix features, std::vector<int> labels, SplitMasks masks);

  Index num_nodes() const noexcept { return num_nodes_; }
  Index num_features() const noexcept { return features_.cols(); }
  Index num_classes() const noexcept { return num_classes_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const SparseMatrix& features() const noexcept { return features_; }
  std::span<const int> labels() const noexcept { return labels_; }
  const SplitMasks& masks() const noexcept { return masks_; }

  /// Copy with the same nodes/features/labels but a different edge set
  /// (used to build the training graph of a link-prediction split).
  DatasetBundle with_edges(std::vector<Edge> edges) const;

  /// Copy whose feature rows are scaled to unit L1 norm (zero rows untouched).
  DatasetBundle with_row_normalized_features() const;

 private:
  DatasetBundle() = default;

  Index num_nodes_ = 0;
  Index num_classes_ = 0;
  std::vector<Edge> edges_;
  SparseMatrix features_;
  std::vector<int> labels_;
  SplitMasks masks_;
};

/// Reads the directory bundle format (meta.json, edges.tsv, features.csv,
/// labels.txt, splits.json).
DatasetBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

enum class TransitionKind {
  Symmetric,         // D^-1/2 A D^-1/2
  ColumnStochastic,  // A D^-1
};

struct NormalizedAdjacency {
  SparseMatrix matrix;
  Vector degree;  // degree of the (possibly self-looped) adjacency
  TransitionKind kind = TransitionKind::Symmetric;
  bool self_loops = false;
};

/// D~^-1/2 (A+I) D~^-1/2 with self loops, D^-1/2 A D^-1/2 without.
/// Isolated nodes produce zero rows.
NormalizedAdjacency normalize_adjacency(Index num_nodes, std::span<const Edge> edges,
                                        bool add_self_loops,
                                        TransitionKind kind = TransitionKind::Symmetric);
NormalizedAdjacency normalize_adjacency(const DatasetBundle& bundle, bool add_self_loops);

struct SplitFractions {
  double train = 0.85;
  double val = 0.05;
  double test = 0.10;
};

struct EdgeSplit {
  std::vector<Edge> train_pos;
  std::vector<Edge> val_pos;
  std::vector<Edge> test_pos;
  std::vector<Edge> val_neg;
  std::vector<Edge> test_neg;
  std::uint64_t seed = 0;
};

/// Shuffles edges with `seed`; val/test get floor(|E| * fraction) edges and
/// train keeps the remainder. Negatives are drawn from non-edges of the full graph.
EdgeSplit split_edges(const DatasetBundle& bundle, SplitFractions fractions, std::uint64_t seed);

/// Draws `count` distinct pairs uniformly from pairs that are neither in
/// `graph_edges` nor in `exclude` and are not self loops.
std::vector<Edge> sample_negative_edges(Index num_nodes, const EdgeSet& graph_edges,
                                        std::size_t count, const EdgeSet& exclude,
                                        std::mt19937_64& rng);
std::vector<Edge> sample_negative_edges(const DatasetBundle& bundle, std::size_t count,
                                        const EdgeSet& exclude, std::mt19937_64& rng);

}  // namespace bgae
