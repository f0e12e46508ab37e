#pragma once

#include <cstdint>
#include <vector>

#include "cdimc/matrix.hpp"

namespace cdimc {

struct KMeansOptions {
  int clusters = 2;
  int max_iterations = 100;
  int restarts = 10;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Matrix centers;            // dim x k
  std::vector<int> labels;   // one per column of the data
  double inertia = 0.0;      // ||X - U S||_F^2
  int iterations = 0;        // Lloyd iterations of the kept restart
};

// kmeans on the columns of `data` (dim x n): kmeans++ seeding, Lloyd
// iterations, then single-point transfer refinement until no move lowers the
// objective. Returns the best of `restarts` runs. Labels are renumbered in
// order of first appearance, so data already grouped by cluster yields
// non-decreasing labels.
KMeansResult kmeans(const Matrix& data, const KMeansOptions& options);

// ||X - U S||_F^2 for the given labels and centers.
double kmeans_objective(const Matrix& data, const Matrix& centers, const std::vector<int>& labels);

// Index of the nearest center (squared Euclidean) for every column; ties go
// to the lowest center index.
std::vector<int> nearest_centers(const Matrix& data, const Matrix& centers);

// Squared distance from each column to its assigned center.
Vector assigned_distances(const Matrix& data, const Matrix& centers, const std::vector<int>& labels);

}  // namespace cdimc
