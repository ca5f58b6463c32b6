#pragma once

#include <cstdint>

#include "bgae/graph.hpp"

namespace bgae {

/// Planted-partition graph with class-correlated sparse binary features.
struct SbmConfig {
  Index num_nodes = 200;
  Index num_classes = 4;
  /// Expected degree, split between within-class and cross-class edges.
  double average_degree = 4.0;
  /// Fraction of a node's expected edges that stay inside its class.
  double homophily = 0.8;
  Index num_features = 64;
  /// Probability of an active feature inside / outside the node's topic block.
  double topic_rate = 0.2;
  double noise_rate = 0.01;
  /// Labeled nodes per class in the train mask; val/test take the next slices.
  Index train_per_class = 10;
  Index num_val = 50;
  Index num_test = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

DatasetBundle make_sbm_bundle(const SbmConfig& config);

/// Settings sized like a 2708-node citation graph (7 classes, about 5.3k
/// edges, 1433 sparse features). Synthetic; not a stand-in for real data.
SbmConfig cora_scale_sbm(std::uint64_t seed = 0);

}  // namespace bgae
