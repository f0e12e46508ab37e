#include <gtest/gtest.h>

#include <random>

#include "cdimc/kmeans.hpp"
#include "oracles.hpp"

using namespace cdimc;

TEST(KMeans, DistinctPointsEachOwnCluster) {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(2, 4, rng);
  KMeansOptions opts;
  opts.clusters = 4;
  const KMeansResult r = kmeans(x, opts);
  EXPECT_NEAR(r.inertia, 0.0, 1e-24);
  std::set<int> labels(r.labels.begin(), r.labels.end());
  EXPECT_EQ(labels.size(), 4u);
}

TEST(KMeans, DuplicatedPairs) {
  Matrix x(2, 4);
  x << 1, 1, 5, 5, 2, 2, -3, -3;
  KMeansOptions opts;
  opts.clusters = 2;
  const KMeansResult r = kmeans(x, opts);
  EXPECT_EQ(r.inertia, 0.0);
  EXPECT_EQ(r.labels, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(r.centers.col(0), x.col(0));
  EXPECT_EQ(r.centers.col(1), x.col(2));
}

TEST(KMeans, NoSingleMoveImproves) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = oracle::random_matrix(2, 12, rng);
    KMeansOptions opts;
    opts.clusters = 3;
    opts.seed = static_cast<std::uint64_t>(trial);
    const KMeansResult r = kmeans(x, opts);
    const double cost = oracle::partition_cost(x, r.labels, 3);
    EXPECT_LT(oracle::relative_error(cost, r.inertia), 1e-10);
    EXPECT_LT(oracle::relative_error(kmeans_objective(x, r.centers, r.labels), r.inertia), 1e-10);
    for (std::size_t i = 0; i < 12; ++i) {
      for (int c = 0; c < 3; ++c) {
        if (c == r.labels[i]) continue;
        std::vector<int> moved = r.labels;
        moved[i] = c;
        EXPECT_GE(oracle::partition_cost(x, moved, 3), cost - 1e-12) << "trial " << trial << " point " << i;
      }
    }
  }
}

TEST(KMeans, LabelsNumberedByFirstAppearance) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(3, 30, rng);
  KMeansOptions opts;
  opts.clusters = 4;
  const KMeansResult r = kmeans(x, opts);
  int next = 0;
  for (int l : r.labels) {
    ASSERT_LE(l, next);
    if (l == next) ++next;
  }
}

TEST(KMeans, DeterministicPerSeed) {
  std::mt19937_64 rng(4);
  const Matrix x = oracle::random_matrix(3, 40, rng);
  KMeansOptions opts;
  opts.clusters = 3;
  opts.seed = 9;
  const KMeansResult a = kmeans(x, opts), b = kmeans(x, opts);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centers, b.centers);
}

TEST(KMeans, MoreClustersThanSamplesIsConfigError) {
  KMeansOptions opts;
  opts.clusters = 5;
  EXPECT_THROW(kmeans(Matrix::Zero(2, 4), opts), ConfigError);
}

TEST(NearestCenters, MatchesBruteForceAndTieRule) {
  std::mt19937_64 rng(5);
  const Matrix x = oracle::random_matrix(3, 20, rng);
  const Matrix centers = oracle::random_matrix(3, 4, rng);
  const std::vector<int> got = nearest_centers(x, centers);
  for (Index i = 0; i < 20; ++i) EXPECT_EQ(got[static_cast<std::size_t>(i)], oracle::brute_argmin(x, i, centers));

  Matrix c(1, 3);
  c << -1.0, 5.0, 1.0;
  EXPECT_EQ(nearest_centers(Matrix::Zero(1, 1), c), std::vector<int>{0});
}
