#pragma once

#include <cstdint>
#include <vector>

#include "cdimc/dataset.hpp"
#include "cdimc/graph.hpp"
#include "cdimc/network.hpp"

namespace cdimc {

// One contiguous slice [begin, end) of the rearranged data with everything the
// per-batch losses need.
struct TrainingBatch {
  Index begin = 0;
  Index end = 0;
  std::vector<Matrix> inputs;          // zero-filled, m_v x b
  std::vector<Vector> masks;           // 0/1, length b
  std::vector<SparseMatrix> laplacians;  // block-local, b x b

  Index size() const { return end - begin; }
};

// Contiguous batches of `batch_size`; the last partial batch is kept.
std::vector<TrainingBatch> make_batches(const MultiViewDataset& ds, const NeighborGraph& graph, Index batch_size);

// Zero-filled inputs and 0/1 mask vectors of the whole data set, for inference.
std::vector<Matrix> network_inputs(const MultiViewDataset& ds);
std::vector<Vector> mask_vectors(const MultiViewDataset& ds);

struct PretrainConfig {
  double alpha = 1e-4;
  // Plain SGD with a mean-squared reconstruction term needs a larger step and
  // more steps per epoch than the Adam fine-tuning stage.
  double learning_rate = 3e-2;
  int epochs = 200;
  Index batch_size = 32;
  std::uint64_t seed = 0;
  Index wide_width = 1500;
  DecoderInput decoder_input = DecoderInput::Fused;

  void validate() const;
};

// Components of the recorded pre-training loss.
struct PretrainLoss {
  Var total;
  std::vector<Var> reconstruction;  // ||(Y - Ybar) W||_F^2 per view (unscaled)
  std::vector<Var> graph;           // Tr(H L H^T) per view (unscaled)
};

// sum_v 1/(m_v b) ||(Y_v - Ybar_v) W_v||_F^2 + alpha/(b l) sum_v Tr(H_v L_v H_v^T)
PretrainLoss pretrain_loss(Tape& tape, MultiViewAutoencoder& model, const TrainingBatch& batch, double alpha);

struct PretrainResult {
  MultiViewAutoencoder model;
  std::vector<double> epoch_losses;  // mean batch loss per epoch
  Matrix fused;                      // h* for every sample, k x n
};

// SGD over contiguous batches of the rearranged data for `epochs` epochs,
// starting from a freshly initialized network seeded by config.seed.
PretrainResult run_pretrain(const MultiViewDataset& ds, const NeighborGraph& graph, int clusters,
                            const PretrainConfig& config);
// Same, continuing from an existing model.
PretrainResult run_pretrain(MultiViewAutoencoder model, const MultiViewDataset& ds, const NeighborGraph& graph,
                            const PretrainConfig& config);

}  // namespace cdimc
