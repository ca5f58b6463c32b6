#include "bgae/synthetic.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "bgae/errors.hpp"

namespace bgae {

void SbmConfig::validate() const {
  std::vector<std::string> problems;
  if (num_classes < 1) problems.push_back("sbm: num_classes must be positive");
  if (num_nodes < 2 * num_classes) problems.push_back("sbm: need at least two nodes per class");
  if (!(average_degree > 0.0)) problems.push_back("sbm: average_degree must be positive");
  if (!(homophily >= 0.0 && homophily <= 1.0)) problems.push_back("sbm: homophily must be in [0, 1]");
  if (num_features < num_classes) problems.push_back("sbm: need at least one feature per class");
  if (!(topic_rate >= 0.0 && topic_rate <= 1.0) || !(noise_rate >= 0.0 && noise_rate <= 1.0))
    problems.push_back("sbm: feature rates must be in [0, 1]");
  if (train_per_class < 0 || num_val < 0 || num_test < 0) problems.push_back("sbm: split sizes must be non-negative");
  if (train_per_class * num_classes + num_val + num_test > num_nodes)
    problems.push_back("sbm: split sizes exceed num_nodes");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

DatasetBundle make_sbm_bundle(const SbmConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const Index n = config.num_nodes;
  const Index k = config.num_classes;

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i % k);
  std::shuffle(labels.begin(), labels.end(), rng);

  // Edge probabilities that give the requested degree and homophily.
  const double block = static_cast<double>(n) / static_cast<double>(k);
  const double p_in = std::min(1.0, config.average_degree * config.homophily / std::max(1.0, block - 1.0));
  const double p_out =
      k > 1 ? std::min(1.0, config.average_degree * (1.0 - config.homophily) / (static_cast<double>(n) - block)) : 0.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      const double p = labels[static_cast<std::size_t>(u)] == labels[static_cast<std::size_t>(v)] ? p_in : p_out;
      if (unit(rng) < p) edges.push_back({u, v});
    }
  }

  // Each class owns a contiguous block of feature columns.
  const Index f = config.num_features;
  std::vector<Eigen::Triplet<double>> triplets;
  for (Index i = 0; i < n; ++i) {
    const Index c = labels[static_cast<std::size_t>(i)];
    const Index lo = c * f / k;
    const Index hi = (c + 1) * f / k;
    for (Index j = 0; j < f; ++j) {
      const double rate = (j >= lo && j < hi) ? config.topic_rate : config.noise_rate;
      if (unit(rng) < rate) triplets.emplace_back(i, j, 1.0);
    }
  }
  SparseMatrix features(n, f);
  features.setFromTriplets(triplets.begin(), triplets.end());

  SplitMasks masks;
  masks.train.assign(static_cast<std::size_t>(n), false);
  masks.val.assign(static_cast<std::size_t>(n), false);
  masks.test.assign(static_cast<std::size_t>(n), false);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> per_class(static_cast<std::size_t>(k), 0);
  std::vector<Index> rest;
  for (Index i : order) {
    auto& taken = per_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    if (taken < config.train_per_class) {
      masks.train[static_cast<std::size_t>(i)] = true;
      ++taken;
    } else {
      rest.push_back(i);
    }
  }
  for (std::size_t r = 0; r < rest.size(); ++r) {
    const auto idx = static_cast<std::size_t>(rest[r]);
    if (r < static_cast<std::size_t>(config.num_val)) {
      masks.val[idx] = true;
    } else if (r < static_cast<std::size_t>(config.num_val + config.num_test)) {
      masks.test[idx] = true;
    }
  }
  return DatasetBundle::create(n, k, std::move(edges), std::move(features), std::move(labels), std::move(masks));
}

SbmConfig cora_scale_sbm(std::uint64_t seed) {
  SbmConfig c;
  c.num_nodes = 2708;
  c.num_classes = 7;
  c.average_degree = 3.9;
  c.homophily = 0.81;
  c.num_features = 1433;
  c.topic_rate = 0.05;
  c.noise_rate = 0.008;
  c.train_per_class = 20;
  c.num_val = 500;
  c.num_test = 1000;
  c.seed = seed;
  return c;
}

}  // namespace bgae
