#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cdimc/kmeans.hpp"
#include "cdimc/pretrain.hpp"

namespace cdimc {

// Self-paced kmeans state. centers (U) are fixed once initialized.
struct ClusterState {
  Matrix centers;                     // k x k
  std::vector<int> assignment;        // S as a label per sample
  std::vector<std::uint8_t> weights;  // r
  double lambda = 0.0;                // age parameter
  int iteration = 0;                  // outer iteration t
  Vector losses;                      // Kloss_i = ||h*_i - U S_i||^2
};

struct FinetuneConfig {
  double alpha = 1e-4;
  double learning_rate = 1e-3;
  int max_outer = 50;  // T
  int max_inner = 5;   // Maxiter, epochs per outer iteration
  Index batch_size = 256;
  double stop_threshold = 1e-3;  // xi
  std::uint64_t seed = 0;
  bool self_paced = true;  // false: r stays all ones (ablation)
  int kmeans_restarts = 10;
  int kmeans_max_iterations = 100;

  void validate() const;
};

// kmeans on the columns of `fused`; r = 1 and lambda = mean(Kloss), i.e. the
// age-parameter schedule evaluated at t = 0.
ClusterState init_clusters(const Matrix& fused, int clusters, const KMeansOptions& options);

// S_{:,i} = argmin_c ||h*_i - U_{:,c}||^2, ties to the lowest c.
std::vector<int> assign_clusters(const Matrix& fused, const Matrix& centers);

// r_i = 1 iff Kloss_i <= lambda.
std::vector<std::uint8_t> update_weights(const Vector& losses, double lambda);

// lambda = mean(Kloss) + t * std(Kloss) / T with the population standard
// deviation; requires 1 <= t <= T.
double update_lambda(const Vector& losses, int t, int max_outer);

Vector cluster_losses(const Matrix& fused, const Matrix& centers, const std::vector<int>& assignment);

// Fraction of samples whose cluster changed: 1 - (1/n) sum_ij S^t_ij S^{t-1}_ij.
double change_fraction(const std::vector<int>& previous, const std::vector<int>& current);

struct FinetuneLoss {
  Var total;
  Var clustering;  // sum_i r_i ||h*_i - U S_i||^2 (unscaled)
  Var fused;       // h* of the batch
  std::vector<Var> graph;
  double offset = 0.0;  // the constant -lambda sum(r) / (b k) included in total
};

// 1/(b k) sum_i r_i (||h*_i - U S_i||^2 - lambda) + alpha/(b l) sum_v Tr(H_v L_v H_v^T).
// The -lambda r_i part is a constant and only affects the reported value.
FinetuneLoss finetune_loss(Tape& tape, MultiViewAutoencoder& model, const TrainingBatch& batch,
                           const ClusterState& state, double alpha);

struct IterationRecord {
  int t = 0;
  double loss = 0.0;          // mean batch loss over the inner epochs
  double fit_loss = 0.0;      // same without the constant -lambda r term
  double lambda = 0.0;        // age parameter after this iteration's update
  double lambda_used = 0.0;   // threshold applied to the weights this iteration
  Index selected = 0;         // sum r
  double change = 0.0;        // fraction of changed assignments
};

// Handed to an observer after every outer iteration, once S, r and lambda
// have been updated.
struct IterationSnapshot {
  const IterationRecord& record;
  const ClusterState& state;
  const Matrix& fused;
};

struct FinetuneResult {
  std::vector<int> assignment;
  ClusterState state;
  std::vector<int> initial_assignment;
  std::vector<IterationRecord> trace;
  std::vector<std::string> warnings;
  bool stopped_early = false;
};

using FinetuneObserver = std::function<void(const IterationSnapshot&)>;

// Alternating optimization: for t = 1..T run max_inner epochs of Adam updates
// of the encoders batch by batch, then update S, r and lambda, and stop once
// the change fraction drops below stop_threshold.
FinetuneResult run_finetune(MultiViewAutoencoder& model, const MultiViewDataset& ds, const NeighborGraph& graph,
                            const FinetuneConfig& config, const FinetuneObserver& observer = {});

}  // namespace cdimc
