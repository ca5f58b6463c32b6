#include <gtest/gtest.h>

#include <random>

#include "bgae/errors.hpp"
#include "bgae/evaluation.hpp"

namespace bgae {
namespace {

Matrix blobs(const std::vector<std::pair<double, double>>& centers, Index per, double spread,
             std::mt19937_64& rng, std::vector<int>* labels = nullptr) {
  std::normal_distribution<double> g(0.0, spread);
  Matrix x(static_cast<Index>(centers.size()) * per, 2);
  Index row = 0;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (Index i = 0; i < per; ++i, ++row) {
      x(row, 0) = centers[c].first + g(rng);
      x(row, 1) = centers[c].second + g(rng);
      if (labels) labels->push_back(static_cast<int>(c));
    }
  }
  return x;
}

TEST(KMeans, SeparatesTwoBlobs) {
  std::mt19937_64 rng(1);
  std::vector<int> truth;
  const Matrix x = blobs({{0, 0}, {10, 10}}, 30, 0.5, rng, &truth);
  const auto r = kmeans(x, 2);
  EXPECT_EQ(clustering_accuracy(r.assignments, truth), 1.0);
}

TEST(KMeans, KEqualsNGivesZeroInertia) {
  std::mt19937_64 rng(2);
  const Matrix x = blobs({{0, 0}, {3, 1}}, 6, 1.0, rng);
  const auto r = kmeans(x, static_cast<int>(x.rows()));
  EXPECT_EQ(r.inertia, 0.0);
}

TEST(KMeans, SingleClusterIsColumnMean) {
  std::mt19937_64 rng(3);
  const Matrix x = blobs({{1, 2}, {-4, 0}}, 10, 1.0, rng);
  const auto r = kmeans(x, 1);
  EXPECT_LE((r.centroids.row(0) - x.colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KMeans, DeterministicForSeed) {
  std::mt19937_64 rng(4);
  const Matrix x = blobs({{0, 0}, {2, 0}, {0, 2}}, 20, 1.0, rng);
  KMeansOptions o;
  o.seed = 9;
  const auto a = kmeans(x, 3, o);
  const auto b = kmeans(x, 3, o);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.inertia, b.inertia);
}

TEST(KMeans, DuplicatePointsDoNotLeaveEmptyClusters) {
  Matrix x = Matrix::Zero(10, 2);
  x.row(9) << 5, 5;
  const auto r = kmeans(x, 3);
  EXPECT_TRUE(r.centroids.allFinite());
  EXPECT_EQ(r.inertia, 0.0);
}

TEST(KMeans, InertiaMatchesAssignments) {
  std::mt19937_64 rng(5);
  const Matrix x = blobs({{0, 0}, {4, 4}, {8, 0}}, 15, 1.5, rng);
  const auto r = kmeans(x, 3);
  double inertia = 0.0;
  for (Index i = 0; i < x.rows(); ++i) inertia += (x.row(i) - r.centroids.row(r.assignments[i])).squaredNorm();
  EXPECT_NEAR(r.inertia, inertia, 1e-9);
}

TEST(KMeans, InvalidInputsRejected) {
  const Matrix x = Matrix::Ones(3, 2);
  EXPECT_THROW(kmeans(x, 0), ValidationError);
  EXPECT_THROW(kmeans(x, 4), ValidationError);
  Matrix bad = x;
  bad(0, 0) = std::nan("");
  EXPECT_THROW(kmeans(bad, 2), ValidationError);
}

}  // namespace
}  // namespace bgae
