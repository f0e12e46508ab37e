#pragma once

#include <utility>
#include <vector>

#include "cdimc/dataset.hpp"
#include "cdimc/kmeans.hpp"

namespace cdimc {

// Symmetric 0/1 kNN adjacency of one view, stored as sorted neighbor lists.
// Missing instances have no neighbors and no sample is its own neighbor.
struct ViewGraph {
  std::vector<std::vector<Index>> neighbors;

  Index nodes() const { return static_cast<Index>(neighbors.size()); }
  Index edges() const;  // undirected edge count
  bool adjacent(Index i, Index j) const;
  SparseMatrix adjacency() const;
  // D - N over the full node set.
  SparseMatrix laplacian() const;
  // Principal sub-block [begin, end): adjacency restricted to the block and
  // degrees counted inside it only.
  SparseMatrix block_laplacian(Index begin, Index end) const;
  Index block_edges(Index begin, Index end) const;
};

struct NeighborGraph {
  std::vector<ViewGraph> views;
};

// Per view, among available instances only: i and j are linked iff one is
// among the other's `knn` nearest (Euclidean, ties to the lower index). A view
// with at most one available instance gets an empty graph.
NeighborGraph build_knn_graph(const MultiViewDataset& ds, int knn);

// Sub-Laplacians of every view for the sample range [begin, end).
std::vector<SparseMatrix> batch_subblock(const NeighborGraph& graph, Index begin, Index end);

// Sample order produced by the cluster-grouping step. order[i] is the original
// index of the i-th rearranged sample; inverse undoes it.
struct Rearrangement {
  std::vector<Index> order;
  std::vector<Index> inverse;
  std::vector<int> clusters;  // kmeans cluster of each original sample

  // Maps a per-sample vector in rearranged order back to original order.
  template <typename T>
  std::vector<T> restore(const std::vector<T>& rearranged) const {
    std::vector<T> out(rearranged.size());
    for (std::size_t i = 0; i < order.size(); ++i) out[static_cast<std::size_t>(order[i])] = rearranged[i];
    return out;
  }
};

// Mean-fills and stacks all views, runs kmeans with the given options and
// groups samples by cluster id (stable by original index).
std::pair<MultiViewDataset, Rearrangement> rearrange(const MultiViewDataset& ds, const KMeansOptions& options);

// Rearrangement of an explicit cluster assignment (stable grouping).
Rearrangement group_by_cluster(const std::vector<int>& clusters);

}  // namespace cdimc
