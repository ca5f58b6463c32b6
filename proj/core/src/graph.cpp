#include "bgae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bgae/errors.hpp"

namespace bgae {

std::uint64_t EdgeSet::key(Index a, Index b) {
  const auto e = Edge::canonical(a, b);
  return (static_cast<std::uint64_t>(e.u) << 32) | static_cast<std::uint64_t>(e.v);
}

EdgeSet::EdgeSet(std::span<const Edge> edges) {
  keys_.reserve(edges.size() * 2);
  for (const auto& e : edges) insert(e.u, e.v);
}

bool EdgeSet::insert(Index a, Index b) { return keys_.insert(key(a, b)).second; }

bool EdgeSet::contains(Index a, Index b) const { return keys_.contains(key(a, b)); }

namespace {

std::vector<Index> mask_ids(const std::vector<bool>& mask) {
  std::vector<Index> ids;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) ids.push_back(static_cast<Index>(i));
  }
  return ids;
}

}  // namespace

std::vector<Index> SplitMasks::train_ids() const { return mask_ids(train); }
std::vector<Index> SplitMasks::val_ids() const { return mask_ids(val); }
std::vector<Index> SplitMasks::test_ids() const { return mask_ids(test); }

DatasetBundle DatasetBundle::create(Index num_nodes, Index num_classes, std::vector<Edge> edges,
                                    SparseMatrix features, std::vector<int> labels,
                                    SplitMasks masks) {
  std::vector<std::string> violations;
  if (num_nodes < 1) violations.push_back("num_nodes must be >= 1");
  if (num_classes < 1) violations.push_back("num_classes must be >= 1");

  EdgeSet seen;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    const std::string where = "edge #" + std::to_string(k) + " (" + std::to_string(e.u) + "," +
                              std::to_string(e.v) + ")";
    if (e.u < 0 || e.v < 0 || e.u >= num_nodes || e.v >= num_nodes) {
      violations.push_back(where + ": endpoint out of range [0, " + std::to_string(num_nodes) + ")");
      continue;
    }
    if (e.u == e.v) {
      violations.push_back(where + ": self loop");
      continue;
    }
    if (e.u > e.v) violations.push_back(where + ": endpoints not ordered i<j");
    if (!seen.insert(e.u, e.v)) violations.push_back(where + ": duplicate edge");
  }

  if (features.rows() != num_nodes) {
    violations.push_back("features have " + std::to_string(features.rows()) + " rows, expected " +
                         std::to_string(num_nodes));
  }
  for (Index k = 0; k < features.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(features, k); it; ++it) {
      if (!std::isfinite(it.value())) {
        violations.push_back("feature (" + std::to_string(it.row()) + "," +
                             std::to_string(it.col()) + ") is not finite");
      }
    }
  }

  if (static_cast<Index>(labels.size()) != num_nodes) {
    violations.push_back("labels has " + std::to_string(labels.size()) + " entries, expected " +
                         std::to_string(num_nodes));
  } else if (num_classes >= 1) {
    std::vector<Index> per_class(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= num_classes) {
        violations.push_back("label of node " + std::to_string(i) + " is " +
                             std::to_string(labels[i]) + ", outside [0, " +
                             std::to_string(num_classes) + ")");
      } else {
        ++per_class[static_cast<std::size_t>(labels[i])];
      }
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
      if (per_class[c] == 0) violations.push_back("class " + std::to_string(c) + " has no nodes");
    }
  }

  const auto n = static_cast<std::size_t>(std::max<Index>(num_nodes, 0));
  for (auto* mask : {&masks.train, &masks.val, &masks.test}) {
    if (mask->empty()) mask->assign(n, false);
  }
  if (masks.train.size() != n || masks.val.size() != n || masks.test.size() != n) {
    violations.push_back("split masks must have length num_nodes");
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const int hits = int(masks.train[i]) + int(masks.val[i]) + int(masks.test[i]);
      if (hits > 1) violations.push_back("node " + std::to_string(i) + " is in more than one split");
    }
  }

  if (!violations.empty()) throw ValidationError(std::move(violations));

  DatasetBundle b;
  b.num_nodes_ = num_nodes;
  b.num_classes_ = num_classes;
  b.edges_ = std::move(edges);
  b.features_ = std::move(features);
  b.features_.makeCompressed();
  b.labels_ = std::move(labels);
  b.masks_ = std::move(masks);
  return b;
}

DatasetBundle DatasetBundle::with_edges(std::vector<Edge> edges) const {
  return create(num_nodes_, num_classes_, std::move(edges), features_, labels_, masks_);
}

DatasetBundle DatasetBundle::with_row_normalized_features() const {
  DatasetBundle b = *this;
  for (Index r = 0; r < b.features_.outerSize(); ++r) {
    double total = 0.0;
    for (SparseMatrix::InnerIterator it(b.features_, r); it; ++it) total += std::abs(it.value());
    if (total == 0.0) continue;
    for (SparseMatrix::InnerIterator it(b.features_, r); it; ++it) it.valueRef() /= total;
  }
  return b;
}

NormalizedAdjacency normalize_adjacency(Index num_nodes, std::span<const Edge> edges,
                                        bool add_self_loops, TransitionKind kind) {
  if (num_nodes < 1) throw ValidationError("normalize_adjacency requires at least one node");

  Vector degree = Vector::Zero(num_nodes);
  for (const auto& e : edges) {
    degree[e.u] += 1.0;
    degree[e.v] += 1.0;
  }
  if (add_self_loops) degree.array() += 1.0;

  Vector inv_sqrt = Vector::Zero(num_nodes);
  Vector inv = Vector::Zero(num_nodes);
  for (Index i = 0; i < num_nodes; ++i) {
    if (degree[i] > 0.0) {
      inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
      inv[i] = 1.0 / degree[i];
    }
  }

  // Entry (i,j) of the normalized matrix; the symmetric case multiplies the
  // same two factors in the same order for (i,j) and (j,i), so the result is
  // exactly symmetric.
  auto weight = [&](Index i, Index j) {
    if (kind == TransitionKind::Symmetric) {
      const Index a = std::min(i, j);
      const Index b = std::max(i, j);
      return inv_sqrt[a] * inv_sqrt[b];
    }
    return inv[j];
  };

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2 + (add_self_loops ? static_cast<std::size_t>(num_nodes) : 0));
  for (const auto& e : edges) {
    triplets.emplace_back(e.u, e.v, weight(e.u, e.v));
    triplets.emplace_back(e.v, e.u, weight(e.v, e.u));
  }
  if (add_self_loops) {
    for (Index i = 0; i < num_nodes; ++i) triplets.emplace_back(i, i, weight(i, i));
  }

  NormalizedAdjacency out;
  out.matrix.resize(num_nodes, num_nodes);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  out.degree = std::move(degree);
  out.kind = kind;
  out.self_loops = add_self_loops;
  return out;
}

NormalizedAdjacency normalize_adjacency(const DatasetBundle& bundle, bool add_self_loops) {
  return normalize_adjacency(bundle.num_nodes(), bundle.edges(), add_self_loops);
}

std::vector<Edge> sample_negative_edges(Index num_nodes, const EdgeSet& graph_edges,
                                        std::size_t count, const EdgeSet& exclude,
                                        std::mt19937_64& rng) {
  if (count == 0) return {};
  const auto n = static_cast<std::uint64_t>(num_nodes);
  const std::uint64_t total_pairs = n < 2 ? 0 : n * (n - 1) / 2;
  const std::uint64_t blocked = graph_edges.size() + exclude.size();

  // Upper bound on admissible pairs; exact when exclude and graph are disjoint.
  const std::uint64_t upper = total_pairs > graph_edges.size() ? total_pairs - graph_edges.size() : 0;
  if (count > upper) {
    throw ValidationError("cannot sample " + std::to_string(count) + " negative edges: only " +
                          std::to_string(upper) + " non-edges exist");
  }

  const bool dense = total_pairs == 0 || 2 * blocked > total_pairs ||
                     (total_pairs - std::min(blocked, total_pairs)) < 2 * count;
  std::vector<Edge> out;
  out.reserve(count);

  if (dense) {
    std::vector<Edge> admissible;
    for (Index i = 0; i < num_nodes; ++i) {
      for (Index j = i + 1; j < num_nodes; ++j) {
        if (!graph_edges.contains(i, j) && !exclude.contains(i, j)) admissible.push_back({i, j});
      }
    }
    if (admissible.size() < count) {
      throw ValidationError("cannot sample " + std::to_string(count) + " negative edges: only " +
                            std::to_string(admissible.size()) + " admissible non-edges exist");
    }
    for (std::size_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, admissible.size() - 1);
      std::swap(admissible[k], admissible[pick(rng)]);
    }
    admissible.resize(count);
    return admissible;
  }

  std::uniform_int_distribution<Index> node(0, num_nodes - 1);
  EdgeSet chosen;
  while (out.size() < count) {
    const Index a = node(rng);
    const Index b = node(rng);
    if (a == b) continue;
    if (graph_edges.contains(a, b) || exclude.contains(a, b)) continue;
    if (!chosen.insert(a, b)) continue;
    out.push_back(Edge::canonical(a, b));
  }
  return out;
}

std::vector<Edge> sample_negative_edges(const DatasetBundle& bundle, std::size_t count,
                                        const EdgeSet& exclude, std::mt19937_64& rng) {
  return sample_negative_edges(bundle.num_nodes(), EdgeSet(bundle.edges()), count, exclude, rng);
}

EdgeSplit split_edges(const DatasetBundle& bundle, SplitFractions fractions, std::uint64_t seed) {
  const double total = fractions.train + fractions.val + fractions.test;
  if (std::abs(total - 1.0) > 1e-9 || fractions.train < 0 || fractions.val < 0 ||
      fractions.test < 0) {
    throw ValidationError("split fractions must be nonnegative and sum to 1");
  }
  const auto num_edges = bundle.edges().size();
  // The epsilon keeps products such as 100 * 0.29 from flooring one short.
  const auto n_val = static_cast<std::size_t>(std::floor(double(num_edges) * fractions.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(double(num_edges) * fractions.test + 1e-9));
  if (n_val < 1 || n_test < 1 || n_val + n_test >= num_edges) {
    throw ValidationError("graph with " + std::to_string(num_edges) +
                          " edges is too small to populate train/val/test splits");
  }

  std::vector<Edge> shuffled(bundle.edges().begin(), bundle.edges().end());
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  EdgeSplit split;
  split.seed = seed;
  split.val_pos.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.test_pos.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val),
                        shuffled.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  split.train_pos.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val + n_test),
                         shuffled.end());

  const EdgeSet all_edges(bundle.edges());
  EdgeSet taken;
  split.val_neg = sample_negative_edges(bundle.num_nodes(), all_edges, n_val, taken, rng);
  for (const auto& e : split.val_neg) taken.insert(e.u, e.v);
  split.test_neg = sample_negative_edges(bundle.num_nodes(), all_edges, n_test, taken, rng);
  return split;
}

}  // namespace bgae
