#include "cdimc/pretrain.hpp"

#include <cmath>

#include "cdimc/optimizer.hpp"

namespace cdimc {

std::vector<Matrix> network_inputs(const MultiViewDataset& ds) { return zero_fill(ds); }

std::vector<Vector> mask_vectors(const MultiViewDataset& ds) {
  std::vector<Vector> out;
  for (std::size_t v = 0; v < ds.view_count(); ++v) out.push_back(ds.mask_vector(v));
  return out;
}

std::vector<TrainingBatch> make_batches(const MultiViewDataset& ds, const NeighborGraph& graph, Index batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (graph.views.size() != ds.view_count()) throw DimensionError("make_batches: graph and dataset view counts differ");
  const std::vector<Matrix> inputs = network_inputs(ds);
  const std::vector<Vector> masks = mask_vectors(ds);
  std::vector<TrainingBatch> batches;
  for (Index begin = 0; begin < ds.samples(); begin += batch_size) {
    TrainingBatch b;
    b.begin = begin;
    b.end = std::min(ds.samples(), begin + batch_size);
    for (std::size_t v = 0; v < ds.view_count(); ++v) {
      b.inputs.push_back(inputs[v].middleCols(begin, b.size()));
      b.masks.push_back(masks[v].segment(begin, b.size()));
    }
    b.laplacians = batch_subblock(graph, b.begin, b.end);
    batches.push_back(std::move(b));
  }
  return batches;
}

void PretrainConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be non-negative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("pretrain learning rate must be positive");
  if (epochs < 0) throw ConfigError("pretrain epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("pretrain batch size must be positive");
  if (wide_width < 1) throw ConfigError("wide layer width must be positive");
}

PretrainLoss pretrain_loss(Tape& tape, MultiViewAutoencoder& model, const TrainingBatch& batch, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  const std::size_t l = model.views();
  if (batch.inputs.size() != l || batch.masks.size() != l || batch.laplacians.size() != l)
    throw DimensionError("pretrain_loss: batch does not match the network's view count");
  const double b = static_cast<double>(batch.size());

  PretrainLoss loss;
  std::vector<Var> inputs, codes;
  for (std::size_t v = 0; v < l; ++v) {
    inputs.push_back(tape.constant(batch.inputs[v]));
    codes.push_back(model.encoder(v).forward(tape, inputs.back()));
  }
  Var fused;
  if (model.decoder_input() == DecoderInput::Fused) fused = mean_fuse(codes, batch.masks);

  std::vector<Var> terms;
  std::vector<double> coeffs;
  for (std::size_t v = 0; v < l; ++v) {
    Var source = model.decoder_input() == DecoderInput::Fused ? fused : codes[v];
    Var recon = model.decoder(v).forward(tape, source);
    loss.reconstruction.push_back(masked_frobenius(sub(inputs[v], recon), batch.masks[v]));
    terms.push_back(loss.reconstruction.back());
    coeffs.push_back(1.0 / (static_cast<double>(batch.inputs[v].rows()) * b));
  }
  for (std::size_t v = 0; v < l; ++v) {
    loss.graph.push_back(laplacian_trace(codes[v], batch.laplacians[v]));
    terms.push_back(loss.graph.back());
    coeffs.push_back(alpha / (b * static_cast<double>(l)));
  }
  loss.total = weighted_sum(terms, coeffs);
  return loss;
}

PretrainResult run_pretrain(const MultiViewDataset& ds, const NeighborGraph& graph, int clusters,
                            const PretrainConfig& config) {
  config.validate();
  NetworkShape shape;
  for (std::size_t v = 0; v < ds.view_count(); ++v) shape.view_dims.push_back(ds.view_dim(v));
  shape.code_dim = clusters;
  shape.wide_width = config.wide_width;
  shape.decoder_input = config.decoder_input;
  return run_pretrain(MultiViewAutoencoder(shape, config.seed), ds, graph, config);
}

PretrainResult run_pretrain(MultiViewAutoencoder model, const MultiViewDataset& ds, const NeighborGraph& graph,
                            const PretrainConfig& config) {
  config.validate();
  const std::vector<TrainingBatch> batches = make_batches(ds, graph, config.batch_size);
  OptimizerConfig opt;
  opt.kind = OptimizerKind::Sgd;
  opt.learning_rate = config.learning_rate;
  Optimizer optimizer(opt, model.parameters());

  PretrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double sum = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      try {
        Tape tape;
        PretrainLoss loss = pretrain_loss(tape, model, batches[bi], config.alpha);
        optimizer.zero_grad();
        tape.backward(loss.total);
        optimizer.step();
        sum += loss.total.value()(0, 0);
      } catch (const NumericError& e) {
        throw NumericError("pretrain epoch " + std::to_string(epoch + 1) + " batch " + std::to_string(bi + 1) + ": " +
                           e.what());
      }
    }
    result.epoch_losses.push_back(sum / static_cast<double>(batches.size()));
  }
  const std::vector<Matrix> inputs = network_inputs(ds);
  const std::vector<Vector> masks = mask_vectors(ds);
  result.fused = model.fused_codes(inputs, masks);
  require_finite(result.fused, "pretrain: fused codes");
  result.model = std::move(model);
  return result;
}

}  // namespace cdimc
