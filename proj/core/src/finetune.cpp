#include "cdimc/finetune.hpp"

#include <cmath>

#include "cdimc/optimizer.hpp"

namespace cdimc {

void FinetuneConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be non-negative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("finetune learning rate must be positive");
  if (max_outer < 1) throw ConfigError("max_outer (T) must be at least 1");
  if (max_inner < 0) throw ConfigError("max_inner must be non-negative");
  if (batch_size < 1) throw ConfigError("finetune batch size must be positive");
  if (!(stop_threshold > 0.0)) throw ConfigError("stop threshold must be positive");
  if (kmeans_restarts < 1 || kmeans_max_iterations < 1) throw ConfigError("kmeans settings must be positive");
}

std::vector<int> assign_clusters(const Matrix& fused, const Matrix& centers) { return nearest_centers(fused, centers); }

Vector cluster_losses(const Matrix& fused, const Matrix& centers, const std::vector<int>& assignment) {
  return assigned_distances(fused, centers, assignment);
}

std::vector<std::uint8_t> update_weights(const Vector& losses, double lambda) {
  std::vector<std::uint8_t> r(static_cast<std::size_t>(losses.size()));
  for (Index i = 0; i < losses.size(); ++i) r[static_cast<std::size_t>(i)] = losses[i] <= lambda ? 1 : 0;
  return r;
}

double update_lambda(const Vector& losses, int t, int max_outer) {
  if (losses.size() == 0) throw ContractError("update_lambda: empty loss vector");
  if (max_outer < 1 || t < 1 || t > max_outer)
    throw ContractError("update_lambda: need 1 <= t <= T, got t = " + std::to_string(t) + ", T = " +
                        std::to_string(max_outer));
  const double mean = losses.mean();
  const double var = (losses.array() - mean).square().mean();
  return mean + static_cast<double>(t) * std::sqrt(var) / static_cast<double>(max_outer);
}

double change_fraction(const std::vector<int>& previous, const std::vector<int>& current) {
  if (previous.size() != current.size() || current.empty())
    throw ContractError("change_fraction: assignments must be non-empty and of equal length");
  std::size_t same = 0;
  for (std::size_t i = 0; i < current.size(); ++i) same += previous[i] == current[i] ? 1 : 0;
  return 1.0 - static_cast<double>(same) / static_cast<double>(current.size());
}

ClusterState init_clusters(const Matrix& fused, int clusters, const KMeansOptions& options) {
  require_finite(fused, "init_clusters");
  if (clusters > fused.cols())
    throw ConfigError("init_clusters: " + std::to_string(clusters) + " clusters for " + std::to_string(fused.cols()) +
                      " samples");
  KMeansOptions opts = options;
  opts.clusters = clusters;
  KMeansResult km = kmeans(fused, opts);
  ClusterState state;
  state.centers = std::move(km.centers);
  state.assignment = std::move(km.labels);
  state.weights.assign(static_cast<std::size_t>(fused.cols()), 1);
  state.losses = cluster_losses(fused, state.centers, state.assignment);
  state.lambda = state.losses.mean();
  return state;
}

FinetuneLoss finetune_loss(Tape& tape, MultiViewAutoencoder& model, const TrainingBatch& batch,
                           const ClusterState& state, double alpha) {
  const std::size_t l = model.views();
  if (batch.inputs.size() != l || batch.masks.size() != l || batch.laplacians.size() != l)
    throw DimensionError("finetune_loss: batch does not match the network's view count");
  const Index b = batch.size();
  const double k = static_cast<double>(model.code_dim());

  FinetuneLoss loss;
  std::vector<Var> codes;
  for (std::size_t v = 0; v < l; ++v) codes.push_back(model.encoder(v).forward(tape, tape.constant(batch.inputs[v])));
  loss.fused = mean_fuse(codes, batch.masks);

  Matrix targets(model.code_dim(), b);
  Vector r(b);
  for (Index i = 0; i < b; ++i) {
    const auto idx = static_cast<std::size_t>(batch.begin + i);
    targets.col(i) = state.centers.col(state.assignment.at(idx));
    r[i] = state.weights.at(idx) ? 1.0 : 0.0;
  }
  loss.clustering = masked_frobenius(sub(loss.fused, tape.constant(std::move(targets))), r);

  const double bd = static_cast<double>(b);
  std::vector<Var> terms{loss.clustering, tape.constant(Matrix::Constant(1, 1, -state.lambda * r.sum()))};
  std::vector<double> coeffs{1.0 / (bd * k), 1.0 / (bd * k)};
  for (std::size_t v = 0; v < l; ++v) {
    loss.graph.push_back(laplacian_trace(codes[v], batch.laplacians[v]));
    terms.push_back(loss.graph.back());
    coeffs.push_back(alpha / (bd * static_cast<double>(l)));
  }
  loss.total = weighted_sum(terms, coeffs);
  loss.offset = -state.lambda * r.sum() / (bd * k);
  return loss;
}

FinetuneResult run_finetune(MultiViewAutoencoder& model, const MultiViewDataset& ds, const NeighborGraph& graph,
                            const FinetuneConfig& config, const FinetuneObserver& observer) {
  config.validate();
  const std::vector<Matrix> inputs = network_inputs(ds);
  const std::vector<Vector> masks = mask_vectors(ds);
  const std::vector<TrainingBatch> batches = make_batches(ds, graph, config.batch_size);

  KMeansOptions km;
  km.clusters = model.code_dim();
  km.restarts = config.kmeans_restarts;
  km.max_iterations = config.kmeans_max_iterations;
  km.seed = config.seed;

  FinetuneResult result;
  Matrix fused = model.fused_codes(inputs, masks);
  ClusterState state = init_clusters(fused, model.code_dim(), km);
  result.initial_assignment = state.assignment;

  OptimizerConfig opt;
  opt.kind = OptimizerKind::Adam;
  opt.learning_rate = config.learning_rate;
  Optimizer optimizer(opt, model.encoder_parameters());

  for (int t = 1; t <= config.max_outer; ++t) {
    IterationRecord record;
    record.t = t;
    double loss_sum = 0.0, fit_sum = 0.0;
    int loss_count = 0;
    for (int epoch = 0; epoch < config.max_inner; ++epoch) {
      for (std::size_t bi = 0; bi < batches.size(); ++bi) {
        try {
          Tape tape;
          FinetuneLoss loss = finetune_loss(tape, model, batches[bi], state, config.alpha);
          optimizer.zero_grad();
          tape.backward(loss.total);
          optimizer.step();
          loss_sum += loss.total.value()(0, 0);
          fit_sum += loss.total.value()(0, 0) - loss.offset;
          ++loss_count;
        } catch (const NumericError& e) {
          throw NumericError("finetune iteration " + std::to_string(t) + " epoch " + std::to_string(epoch + 1) +
                             " batch " + std::to_string(bi + 1) + ": " + e.what());
        }
      }
    }

    fused = model.fused_codes(inputs, masks);
    if (!fused.allFinite()) throw NumericError("finetune iteration " + std::to_string(t) + ": non-finite codes");
    const std::vector<int> previous = state.assignment;
    state.assignment = assign_clusters(fused, state.centers);
    state.losses = cluster_losses(fused, state.centers, state.assignment);
    record.lambda_used = state.lambda;
    if (config.self_paced)
      state.weights = update_weights(state.losses, state.lambda);
    else
      state.weights.assign(state.weights.size(), 1);
    state.lambda = update_lambda(state.losses, t, config.max_outer);
    state.iteration = t;

    record.lambda = state.lambda;
    record.selected = 0;
    for (std::uint8_t w : state.weights) record.selected += w;
    record.change = change_fraction(previous, state.assignment);
    if (loss_count > 0) {
      record.loss = loss_sum / static_cast<double>(loss_count);
      record.fit_loss = fit_sum / static_cast<double>(loss_count);
    } else {
      // No inner updates: report the full-data objective instead.
      Tape tape;
      TrainingBatch whole;
      whole.begin = 0;
      whole.end = ds.samples();
      whole.inputs = inputs;
      whole.masks = masks;
      whole.laplacians = batch_subblock(graph, 0, ds.samples());
      const FinetuneLoss loss = finetune_loss(tape, model, whole, state, config.alpha);
      record.loss = loss.total.value()(0, 0);
      record.fit_loss = record.loss - loss.offset;
    }
    if (!std::isfinite(record.loss)) throw NumericError("finetune iteration " + std::to_string(t) + ": non-finite loss");
    if (record.selected == 0 && config.alpha == 0.0)
      result.warnings.push_back("iteration " + std::to_string(t) +
                                ": no sample selected and alpha = 0, the next inner loop has no gradient");
    result.trace.push_back(record);
    if (observer) observer(IterationSnapshot{result.trace.back(), state, fused});
    if (record.change < config.stop_threshold) {
      result.stopped_early = t < config.max_outer;
      break;
    }
  }
  result.assignment = state.assignment;
  result.state = std::move(state);
  return result;
}

}  // namespace cdimc
