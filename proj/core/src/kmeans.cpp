#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "bgae/errors.hpp"
#include "bgae/evaluation.hpp"

namespace bgae {
namespace {

/// Squared distances from every point to every centroid, N x k.
Matrix squared_distances(const Matrix& points, const Vector& point_norms, const Matrix& centroids) {
  Matrix d = -2.0 * points * centroids.transpose();
  d.colwise() += point_norms;
  d.rowwise() += centroids.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

Matrix plus_plus_seeds(const Matrix& points, int k, std::mt19937_64& rng) {
  const Index n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  std::uniform_int_distribution<Index> first(0, n - 1);
  Index pick = first(rng);
  centroids.row(0) = points.row(pick);
  chosen[static_cast<std::size_t>(pick)] = true;
  Vector closest = (points.rowwise() - points.row(pick)).rowwise().squaredNorm();

  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    if (total > 0.0) {
      std::discrete_distribution<Index> draw(closest.data(), closest.data() + n);
      pick = draw(rng);
    } else {
      // Every point coincides with a centroid: take an unused point.
      std::vector<Index> unused;
      for (Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) unused.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> any(0, unused.size() - 1);
      pick = unused[any(rng)];
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centroids.row(c) = points.row(pick);
    closest = closest.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }
  return centroids;
}

KMeansResult lloyd(const Matrix& points, const Vector& norms, Matrix centroids, const KMeansOptions& options) {
  const Index n = points.rows();
  const Index k = centroids.rows();
  KMeansResult result;
  result.assignments.assign(static_cast<std::size_t>(n), 0);
  Vector best_distance(n);

  auto assign = [&] {
    const Matrix d = squared_distances(points, norms, centroids);
    for (Index i = 0; i < n; ++i) {
      Index arg = 0;
      best_distance[i] = d.row(i).minCoeff(&arg);
      result.assignments[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
  };

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    assign();
    Matrix updated = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      const auto c = result.assignments[static_cast<std::size_t>(i)];
      updated.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        updated.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: move it onto the point farthest from its centroid.
        Index far = 0;
        best_distance.maxCoeff(&far);
        updated.row(c) = points.row(far);
        best_distance[far] = 0.0;
      }
    }
    const double shift = (updated - centroids).squaredNorm();
    centroids = std::move(updated);
    result.iterations = iter;
    if (shift <= options.tolerance) break;
  }
  assign();
  result.inertia = best_distance.sum();
  result.centroids = std::move(centroids);
  return result;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, const KMeansOptions& options) {
  std::vector<std::string> problems;
  if (k < 1) problems.push_back("kmeans: k must be positive");
  if (k > points.rows()) problems.push_back("kmeans: k exceeds the number of points");
  if (options.restarts < 1) problems.push_back("kmeans: restarts must be positive");
  if (options.max_iterations < 1) problems.push_back("kmeans: max_iterations must be positive");
  if (!points.allFinite()) problems.push_back("kmeans: points contain non-finite values");
  if (!problems.empty()) throw ValidationError(std::move(problems));

  const Vector norms = points.rowwise().squaredNorm();
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(r));
    auto result = lloyd(points, norms, plus_plus_seeds(points, k, rng), options);
    if (result.inertia < best.inertia) best = std::move(result);
  }
  return best;
}

}  // namespace bgae
