#include "cdimc/graph.hpp"

#include <algorithm>
#include <numeric>

namespace cdimc {

Index ViewGraph::edges() const {
  Index total = 0;
  for (const auto& adj : neighbors) total += static_cast<Index>(adj.size());
  return total / 2;
}

bool ViewGraph::adjacent(Index i, Index j) const {
  const auto& adj = neighbors[static_cast<std::size_t>(i)];
  return std::binary_search(adj.begin(), adj.end(), j);
}

SparseMatrix ViewGraph::adjacency() const {
  std::vector<Eigen::Triplet<double>> entries;
  for (Index i = 0; i < nodes(); ++i)
    for (Index j : neighbors[static_cast<std::size_t>(i)]) entries.emplace_back(i, j, 1.0);
  SparseMatrix a(nodes(), nodes());
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

SparseMatrix ViewGraph::laplacian() const { return block_laplacian(0, nodes()); }

SparseMatrix ViewGraph::block_laplacian(Index begin, Index end) const {
  if (begin < 0 || end > nodes() || begin >= end)
    throw ContractError("batch_subblock: invalid range [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
  const Index size = end - begin;
  std::vector<Eigen::Triplet<double>> entries;
  for (Index i = begin; i < end; ++i) {
    double degree = 0.0;
    for (Index j : neighbors[static_cast<std::size_t>(i)]) {
      if (j < begin || j >= end) continue;
      entries.emplace_back(i - begin, j - begin, -1.0);
      degree += 1.0;
    }
    if (degree > 0.0) entries.emplace_back(i - begin, i - begin, degree);
  }
  SparseMatrix l(size, size);
  l.setFromTriplets(entries.begin(), entries.end());
  return l;
}

Index ViewGraph::block_edges(Index begin, Index end) const {
  Index total = 0;
  for (Index i = begin; i < end; ++i)
    for (Index j : neighbors[static_cast<std::size_t>(i)])
      if (j >= begin && j < end) ++total;
  return total / 2;
}

NeighborGraph build_knn_graph(const MultiViewDataset& ds, int knn) {
  if (knn < 1) throw ConfigError("knn must be at least 1");
  const Index n = ds.samples();
  NeighborGraph graph;
  for (std::size_t v = 0; v < ds.view_count(); ++v) {
    ViewGraph g;
    g.neighbors.assign(static_cast<std::size_t>(n), {});
    std::vector<Index> avail;
    for (Index i = 0; i < n; ++i)
      if (ds.masks[v][static_cast<std::size_t>(i)]) avail.push_back(i);
    const auto na = static_cast<Index>(avail.size());
    if (na > 1 && knn >= na)
      throw ConfigError("knn = " + std::to_string(knn) + " but view " + std::to_string(v + 1) + " has only " +
                        std::to_string(na) + " available instances");
    if (na <= 1) {
      graph.views.push_back(std::move(g));
      continue;
    }

    const Matrix& x = ds.views[v];
    Matrix dist(na, na);
    for (Index a = 0; a < na; ++a) {
      dist(a, a) = 0.0;
      for (Index b = a + 1; b < na; ++b) {
        const double d = (x.col(avail[static_cast<std::size_t>(a)]) - x.col(avail[static_cast<std::size_t>(b)])).squaredNorm();
        dist(a, b) = d;
        dist(b, a) = d;
      }
    }

    std::vector<Index> candidates(static_cast<std::size_t>(na - 1));
    for (Index a = 0; a < na; ++a) {
      candidates.clear();
      for (Index b = 0; b < na; ++b)
        if (b != a) candidates.push_back(b);
      // Positions in `avail` are increasing in sample index, so comparing
      // positions breaks ties by the lower sample index.
      std::partial_sort(candidates.begin(), candidates.begin() + knn, candidates.end(), [&](Index p, Index q) {
        return dist(a, p) < dist(a, q) || (dist(a, p) == dist(a, q) && p < q);
      });
      const Index i = avail[static_cast<std::size_t>(a)];
      for (int r = 0; r < knn; ++r) {
        const Index j = avail[static_cast<std::size_t>(candidates[static_cast<std::size_t>(r)])];
        g.neighbors[static_cast<std::size_t>(i)].push_back(j);
        g.neighbors[static_cast<std::size_t>(j)].push_back(i);
      }
    }
    for (auto& adj : g.neighbors) {
      std::sort(adj.begin(), adj.end());
      adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    graph.views.push_back(std::move(g));
  }
  return graph;
}

std::vector<SparseMatrix> batch_subblock(const NeighborGraph& graph, Index begin, Index end) {
  std::vector<SparseMatrix> blocks;
  blocks.reserve(graph.views.size());
  for (const ViewGraph& g : graph.views) blocks.push_back(g.block_laplacian(begin, end));
  return blocks;
}

Rearrangement group_by_cluster(const std::vector<int>& clusters) {
  Rearrangement r;
  r.clusters = clusters;
  r.order.resize(clusters.size());
  std::iota(r.order.begin(), r.order.end(), Index{0});
  std::stable_sort(r.order.begin(), r.order.end(), [&](Index a, Index b) {
    return clusters[static_cast<std::size_t>(a)] < clusters[static_cast<std::size_t>(b)];
  });
  r.inverse.resize(clusters.size());
  for (std::size_t i = 0; i < r.order.size(); ++i) r.inverse[static_cast<std::size_t>(r.order[i])] = static_cast<Index>(i);
  return r;
}

std::pair<MultiViewDataset, Rearrangement> rearrange(const MultiViewDataset& ds, const KMeansOptions& options) {
  const std::vector<Matrix> filled = mean_fill(ds);
  Index total_dim = 0;
  for (const Matrix& x : filled) total_dim += x.rows();
  Matrix stacked(total_dim, ds.samples());
  Index row = 0;
  for (const Matrix& x : filled) {
    stacked.middleRows(row, x.rows()) = x;
    row += x.rows();
  }
  const KMeansResult km = kmeans(stacked, options);
  Rearrangement r = group_by_cluster(km.labels);
  MultiViewDataset permuted = permute_samples(ds, r.order);
  return {std::move(permuted), std::move(r)};
}

}  // namespace cdimc
