#include "cdimc/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace cdimc {

namespace {

constexpr int kMaxRefineRounds = 50;

std::vector<Index> cluster_sizes(const std::vector<int>& labels, int k) {
  std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
  for (int c : labels) ++sizes[static_cast<std::size_t>(c)];
  return sizes;
}

Matrix seed_plus_plus(const Matrix& data, int k, Rng& rng) {
  const Index n = data.cols();
  Matrix centers(data.rows(), k);
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  std::uniform_int_distribution<Index> first(0, n - 1);
  Index pick = first(rng);
  centers.col(0) = data.col(pick);
  chosen[static_cast<std::size_t>(pick)] = true;
  Vector d2 = (data.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double acc = 0.0;
      pick = -1;
      for (Index i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc >= target) break;
      }
    } else {
      // Fewer distinct points than clusters: any unused index will do.
      std::vector<Index> unused;
      for (Index i = 0; i < n; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) unused.push_back(i);
      std::uniform_int_distribution<std::size_t> any(0, unused.size() - 1);
      pick = unused[any(rng)];
    }
    centers.col(c) = data.col(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
    d2 = d2.cwiseMin((data.colwise() - centers.col(c)).colwise().squaredNorm().transpose());
  }
  return centers;
}

Matrix cluster_means(const Matrix& data, const std::vector<int>& labels, int k, const Matrix& fallback) {
  Matrix sums = Matrix::Zero(data.rows(), k);
  std::vector<Index> sizes = cluster_sizes(labels, k);
  for (Index i = 0; i < data.cols(); ++i) sums.col(labels[static_cast<std::size_t>(i)]) += data.col(i);
  for (int c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] > 0)
      sums.col(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    else
      sums.col(c) = fallback.col(c);
  }
  return sums;
}

// Lloyd iterations. Empty clusters are re-seeded with the point farthest from
// its center among clusters that can spare one.
int lloyd(const Matrix& data, Matrix& centers, std::vector<int>& labels, int max_iterations) {
  const int k = static_cast<int>(centers.cols());
  int it = 0;
  for (; it < max_iterations; ++it) {
    std::vector<int> next = nearest_centers(data, centers);
    std::vector<Index> sizes = cluster_sizes(next, k);
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      const Vector dist = assigned_distances(data, cluster_means(data, next, k, centers), next);
      Index far = -1;
      for (Index i = 0; i < data.cols(); ++i) {
        if (sizes[static_cast<std::size_t>(next[static_cast<std::size_t>(i)])] < 2) continue;
        if (far < 0 || dist[i] > dist[far]) far = i;
      }
      if (far < 0) break;
      --sizes[static_cast<std::size_t>(next[static_cast<std::size_t>(far)])];
      next[static_cast<std::size_t>(far)] = c;
      ++sizes[static_cast<std::size_t>(c)];
    }
    const bool stable = !labels.empty() && next == labels;
    labels = std::move(next);
    centers = cluster_means(data, labels, k, centers);
    if (stable) break;
  }
  return it;
}

// Single-point transfers (Hartigan): moving x from A to B changes the
// objective by |B|/(|B|+1) d(x,B) - |A|/(|A|-1) d(x,A). Returns whether any
// point moved.
bool transfer_refine(const Matrix& data, Matrix& centers, std::vector<int>& labels) {
  const int k = static_cast<int>(centers.cols());
  std::vector<Index> sizes = cluster_sizes(labels, k);
  const double scale = std::max(1.0, data.squaredNorm());
  bool any = false;
  for (int pass = 0; pass < 100; ++pass) {
    bool moved = false;
    for (Index i = 0; i < data.cols(); ++i) {
      const int a = labels[static_cast<std::size_t>(i)];
      const double na = static_cast<double>(sizes[static_cast<std::size_t>(a)]);
      if (na < 2.0) continue;
      const double remove_gain = na / (na - 1.0) * (data.col(i) - centers.col(a)).squaredNorm();
      int best = -1;
      double best_cost = remove_gain - 1e-12 * scale;
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(sizes[static_cast<std::size_t>(b)]);
        const double cost = nb / (nb + 1.0) * (data.col(i) - centers.col(b)).squaredNorm();
        if (cost < best_cost) {
          best_cost = cost;
          best = b;
        }
      }
      if (best < 0) continue;
      const double nb = static_cast<double>(sizes[static_cast<std::size_t>(best)]);
      centers.col(a) = (na * centers.col(a) - data.col(i)) / (na - 1.0);
      centers.col(best) = (nb * centers.col(best) + data.col(i)) / (nb + 1.0);
      --sizes[static_cast<std::size_t>(a)];
      ++sizes[static_cast<std::size_t>(best)];
      labels[static_cast<std::size_t>(i)] = best;
      moved = true;
    }
    if (!moved) break;
    any = true;
    centers = cluster_means(data, labels, k, centers);
  }
  return any;
}

void relabel_by_first_appearance(Matrix& centers, std::vector<int>& labels) {
  const int k = static_cast<int>(centers.cols());
  std::vector<int> map(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int c : labels)
    if (map[static_cast<std::size_t>(c)] < 0) map[static_cast<std::size_t>(c)] = next++;
  for (int c = 0; c < k; ++c)
    if (map[static_cast<std::size_t>(c)] < 0) map[static_cast<std::size_t>(c)] = next++;
  Matrix reordered(centers.rows(), k);
  for (int c = 0; c < k; ++c) reordered.col(map[static_cast<std::size_t>(c)]) = centers.col(c);
  centers = std::move(reordered);
  for (int& c : labels) c = map[static_cast<std::size_t>(c)];
}

}  // namespace

std::vector<int> nearest_centers(const Matrix& data, const Matrix& centers) {
  if (data.rows() != centers.rows())
    throw DimensionError("nearest_centers: data dim " + std::to_string(data.rows()) + " vs center dim " +
                         std::to_string(centers.rows()));
  if (centers.cols() == 0) throw ContractError("nearest_centers: no centers");
  std::vector<int> labels(static_cast<std::size_t>(data.cols()));
  for (Index i = 0; i < data.cols(); ++i) {
    int best = 0;
    double best_d = (data.col(i) - centers.col(0)).squaredNorm();
    for (Index c = 1; c < centers.cols(); ++c) {
      const double d = (data.col(i) - centers.col(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

Vector assigned_distances(const Matrix& data, const Matrix& centers, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != data.cols()) throw DimensionError("assigned_distances: label count");
  Vector d(data.cols());
  for (Index i = 0; i < data.cols(); ++i)
    d[i] = (data.col(i) - centers.col(labels[static_cast<std::size_t>(i)])).squaredNorm();
  return d;
}

double kmeans_objective(const Matrix& data, const Matrix& centers, const std::vector<int>& labels) {
  return assigned_distances(data, centers, labels).sum();
}

KMeansResult kmeans(const Matrix& data, const KMeansOptions& options) {
  const int k = options.clusters;
  if (k < 1) throw ConfigError("kmeans: clusters must be positive");
  if (static_cast<Index>(k) > data.cols())
    throw ConfigError("kmeans: " + std::to_string(k) + " clusters for " + std::to_string(data.cols()) + " points");
  if (options.restarts < 1 || options.max_iterations < 1)
    throw ConfigError("kmeans: restarts and max_iterations must be positive");
  require_finite(data, "kmeans");

  Rng rng(options.seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < options.restarts; ++restart) {
    Matrix centers = seed_plus_plus(data, k, rng);
    std::vector<int> labels;
    int iterations = lloyd(data, centers, labels, options.max_iterations);
    for (int round = 0; round < kMaxRefineRounds; ++round) {
      if (!transfer_refine(data, centers, labels)) break;
      iterations += lloyd(data, centers, labels, options.max_iterations);
    }
    const double inertia = kmeans_objective(data, centers, labels);
    if (inertia < best.inertia) {
      best.centers = std::move(centers);
      best.labels = std::move(labels);
      best.inertia = inertia;
      best.iterations = iterations;
    }
  }
  relabel_by_first_appearance(best.centers, best.labels);
  return best;
}

}  // namespace cdimc
