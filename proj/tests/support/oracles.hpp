#pragma once

// Independent reference computations used by the unit and acceptance tests.
// They share no code with the library beyond the Matrix type.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "cdimc/autodiff.hpp"
#include "cdimc/dataset.hpp"
#include "cdimc/graph.hpp"

namespace oracle {

using cdimc::Index;
using cdimc::Matrix;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

// max |a - b| relative to the larger magnitude of the two (floored at 1e-8).
inline double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-8});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// Central differences of `loss` with respect to every entry of `target`.
inline Matrix numeric_gradient(const std::function<double()>& loss, Matrix& target, double eps = 1e-5) {
  Matrix g(target.rows(), target.cols());
  for (Index j = 0; j < target.cols(); ++j) {
    for (Index i = 0; i < target.rows(); ++i) {
      const double saved = target(i, j);
      target(i, j) = saved + eps;
      const double up = loss();
      target(i, j) = saved - eps;
      const double down = loss();
      target(i, j) = saved;
      g(i, j) = (up - down) / (2.0 * eps);
    }
  }
  return g;
}

inline double squared_distance(const Matrix& x, Index i, Index j) {
  double s = 0.0;
  for (Index r = 0; r < x.rows(); ++r) s += (x(r, i) - x(r, j)) * (x(r, i) - x(r, j));
  return s;
}

// OR-symmetrized kNN adjacency among available columns by sorting every
// candidate list; ties go to the lower index.
inline std::vector<std::vector<bool>> brute_knn(const Matrix& x, const std::vector<std::uint8_t>& mask, int knn) {
  const Index n = x.cols();
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
  for (Index i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    std::vector<std::pair<double, Index>> cand;
    for (Index j = 0; j < n; ++j)
      if (j != i && mask[static_cast<std::size_t>(j)]) cand.emplace_back(squared_distance(x, i, j), j);
    std::sort(cand.begin(), cand.end());
    for (int t = 0; t < knn && t < static_cast<int>(cand.size()); ++t) {
      const auto j = static_cast<std::size_t>(cand[static_cast<std::size_t>(t)].second);
      adj[static_cast<std::size_t>(i)][j] = true;
      adj[j][static_cast<std::size_t>(i)] = true;
    }
  }
  return adj;
}

// (1/2) sum_i sum_j ||h_i - h_j||^2 N_ij over a dense 0/1 adjacency.
inline double graph_double_sum(const Matrix& h, const std::vector<std::vector<bool>>& adj, Index offset = 0) {
  double total = 0.0;
  for (Index i = 0; i < h.cols(); ++i)
    for (Index j = 0; j < h.cols(); ++j)
      if (adj[static_cast<std::size_t>(i + offset)][static_cast<std::size_t>(j + offset)])
        total += squared_distance(h, i, j);
  return 0.5 * total;
}

inline std::vector<std::vector<bool>> dense_adjacency(const cdimc::ViewGraph& g) {
  const auto n = static_cast<std::size_t>(g.nodes());
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (Index j : g.neighbors[i]) adj[i][static_cast<std::size_t>(j)] = true;
  return adj;
}

// Best fraction of matches over every bijection between label sets.
inline double exhaustive_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  int k = 0;
  for (int v : pred) k = std::max(k, v + 1);
  for (int v : truth) k = std::max(k, v + 1);
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += perm[static_cast<std::size_t>(pred[i])] == truth[i] ? 1 : 0;
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

// I(a; b) / sqrt(H(a) H(b)) from count maps, natural logs.
inline double direct_nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (const auto& [label, c] : ca) ha -= c / n * std::log(c / n);
  for (const auto& [label, c] : cb) hb -= c / n * std::log(c / n);
  for (const auto& [key, c] : joint) mi += c / n * std::log((c / n) / ((ca[key.first] / n) * (cb[key.second] / n)));
  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;
  return mi / std::sqrt(ha * hb);
}

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Two-pass population standard deviation.
inline double population_std(const std::vector<double>& xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

// Index of the closest column of `centers` to column i of `x`, lowest index on ties.
inline int brute_argmin(const Matrix& x, Index i, const Matrix& centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centers.cols(); ++c) {
    double d = 0.0;
    for (Index r = 0; r < x.rows(); ++r) d += (x(r, i) - centers(r, c)) * (x(r, i) - centers(r, c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Sum of squared distances to cluster means for a labeling.
inline double partition_cost(const Matrix& x, const std::vector<int>& labels, int k) {
  double cost = 0.0;
  for (int c = 0; c < k; ++c) {
    Matrix sum = Matrix::Zero(x.rows(), 1);
    int count = 0;
    for (Index i = 0; i < x.cols(); ++i)
      if (labels[static_cast<std::size_t>(i)] == c) {
        sum += x.col(i);
        ++count;
      }
    if (count == 0) continue;
    const Matrix centre = sum / count;
    for (Index i = 0; i < x.cols(); ++i)
      if (labels[static_cast<std::size_t>(i)] == c) cost += (x.col(i) - centre.col(0)).squaredNorm();
  }
  return cost;
}

// A random incomplete data set with every sample keeping at least one view.
inline cdimc::MultiViewDataset random_incomplete(std::vector<Index> dims, Index n, double missing, std::mt19937_64& rng) {
  std::vector<Matrix> views;
  for (Index m : dims) views.push_back(random_matrix(m, n, rng));
  cdimc::MultiViewDataset ds = cdimc::make_complete(std::move(views));
  std::bernoulli_distribution drop(missing);
  std::uniform_int_distribution<std::size_t> keep(0, dims.size() - 1);
  for (Index i = 0; i < n; ++i) {
    std::size_t kept = 0;
    for (std::size_t v = 0; v < dims.size(); ++v) {
      ds.masks[v][static_cast<std::size_t>(i)] = drop(rng) ? 0 : 1;
      kept += ds.masks[v][static_cast<std::size_t>(i)];
    }
    if (kept == 0) ds.masks[keep(rng)][static_cast<std::size_t>(i)] = 1;
  }
  for (std::size_t v = 0; v < dims.size(); ++v)
    for (Index i = 0; i < n; ++i)
      if (!ds.masks[v][static_cast<std::size_t>(i)]) ds.views[v].col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
  return ds;
}

}  // namespace oracle
