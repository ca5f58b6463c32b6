#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "bgae/errors.hpp"
#include "bgae/evaluation.hpp"

namespace bgae {
namespace {

void check_ranking_input(std::span<const double> scores, std::span<const int> labels,
                         std::size_t& positives, std::size_t& negatives) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  positives = 0;
  negatives = 0;
  for (int y : labels) {
    if (y == 1) {
      ++positives;
    } else if (y == 0) {
      ++negatives;
    } else {
      throw ValidationError("ranking labels must be 0 or 1");
    }
  }
  if (positives == 0 || negatives == 0) throw ValidationError("ranking metric needs both classes present");
}

/// Dense relabeling of arbitrary ids to 0..k-1 (order of first appearance).
std::vector<int> relabel(std::span<const int> ids, int& count) {
  std::map<int, int> map;
  std::vector<int> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto [it, inserted] = map.try_emplace(ids[i], static_cast<int>(map.size()));
    out[i] = it->second;
  }
  count = static_cast<int>(map.size());
  return out;
}

struct Contingency {
  std::vector<std::vector<std::int64_t>> table;  // predicted x truth
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t n = 0;
};

Contingency contingency(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("predicted and truth differ in length");
  int kp = 0;
  int kt = 0;
  const auto p = relabel(predicted, kp);
  const auto t = relabel(truth, kt);
  Contingency c;
  c.table.assign(static_cast<std::size_t>(kp), std::vector<std::int64_t>(static_cast<std::size_t>(kt), 0));
  c.row_sums.assign(static_cast<std::size_t>(kp), 0);
  c.col_sums.assign(static_cast<std::size_t>(kt), 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++c.table[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(t[i])];
    ++c.row_sums[static_cast<std::size_t>(p[i])];
    ++c.col_sums[static_cast<std::size_t>(t[i])];
  }
  c.n = static_cast<std::int64_t>(p.size());
  return c;
}

std::int64_t choose2(std::int64_t x) { return x * (x - 1) / 2; }

double entropy(const std::vector<std::int64_t>& counts, double n) {
  double h = 0.0;
  for (auto c : counts) {
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  check_ranking_input(scores, labels, positives, negatives);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Twice the Mann-Whitney U statistic, kept integral: each positive scores
  // 2 per lower negative and 1 per tied negative.
  std::int64_t twice_u = 0;
  std::int64_t negatives_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t pos = 0;
    std::int64_t neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    twice_u += pos * (2 * negatives_below + neg);
    negatives_below += neg;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  check_ranking_input(scores, labels, positives, negatives);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  double precision_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return precision_sum / static_cast<double>(positives);
}

std::vector<int> max_weight_matching(const Matrix& weights) {
  const Index rows = weights.rows();
  const Index cols = weights.cols();
  const Index n = std::max(rows, cols);
  if (n == 0) return {};
  const double top = weights.size() > 0 ? weights.maxCoeff() : 0.0;
  // Square min-cost problem: cost = top - weight, zero-weight padding.
  Matrix cost = Matrix::Constant(n, n, top);
  cost.topLeftCorner(rows, cols) = (top - weights.array()).matrix();

  // Shortest augmenting path Hungarian algorithm, 1-based potentials.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0);  // column -> row
  std::vector<Index> way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(static_cast<std::size_t>(rows), -1);
  for (Index j = 1; j <= n; ++j) {
    const Index i = match[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= rows && j <= cols) assignment[static_cast<std::size_t>(i - 1)] = static_cast<int>(j - 1);
  }
  return assignment;
}

double clustering_accuracy(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = contingency(predicted, truth);
  if (c.n == 0) return 0.0;
  Matrix weights(static_cast<Index>(c.table.size()), static_cast<Index>(c.col_sums.size()));
  for (std::size_t i = 0; i < c.table.size(); ++i) {
    for (std::size_t j = 0; j < c.col_sums.size(); ++j) {
      weights(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<double>(c.table[i][j]);
    }
  }
  const auto assignment = max_weight_matching(weights);
  std::int64_t matched = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= 0) matched += c.table[i][static_cast<std::size_t>(assignment[i])];
  }
  return static_cast<double>(matched) / static_cast<double>(c.n);
}

double normalized_mutual_information(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = contingency(predicted, truth);
  if (c.n == 0) return 0.0;
  const double n = static_cast<double>(c.n);
  const double h_pred = entropy(c.row_sums, n);
  const double h_truth = entropy(c.col_sums, n);
  if (h_pred == 0.0 && h_truth == 0.0) return 1.0;
  if (h_pred == 0.0 || h_truth == 0.0) return 0.0;

  double mi = 0.0;
  for (std::size_t i = 0; i < c.table.size(); ++i) {
    for (std::size_t j = 0; j < c.col_sums.size(); ++j) {
      const auto nij = c.table[i][j];
      if (nij == 0) continue;
      const double joint = static_cast<double>(nij) / n;
      mi += joint * std::log(n * static_cast<double>(nij) /
                             (static_cast<double>(c.row_sums[i]) * static_cast<double>(c.col_sums[j])));
    }
  }
  mi = std::max(mi, 0.0);
  return std::min(1.0, mi / (0.5 * (h_pred + h_truth)));
}

double adjusted_rand_index(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = contingency(predicted, truth);
  std::int64_t index = 0;
  for (const auto& row : c.table) {
    for (auto nij : row) index += choose2(nij);
  }
  std::int64_t sum_pred = 0;
  for (auto a : c.row_sums) sum_pred += choose2(a);
  std::int64_t sum_truth = 0;
  for (auto b : c.col_sums) sum_truth += choose2(b);
  const std::int64_t total = choose2(c.n);

  // (index - expected) / (max - expected), scaled by 2 * total to stay
  // integral; a single rounding happens in the final division.
  __extension__ typedef __int128 Wide;
  const Wide numerator = Wide{2} * total * index - Wide{2} * sum_pred * sum_truth;
  const Wide denominator = Wide{total} * (sum_pred + sum_truth) - Wide{2} * sum_pred * sum_truth;
  if (denominator == 0) return 1.0;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

ClusteringScores clustering_metrics(std::span<const int> predicted, std::span<const int> truth) {
  return {clustering_accuracy(predicted, truth), normalized_mutual_information(predicted, truth),
          adjusted_rand_index(predicted, truth)};
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("predicted and truth differ in length");
  if (predicted.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  j["metrics"] = metrics;
  j["dataset"] = dataset;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport r;
  r.task = j.at("task").get<std::string>();
  r.metrics = j.at("metrics").get<std::map<std::string, double>>();
  r.dataset = j.at("dataset").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

}  // namespace bgae
