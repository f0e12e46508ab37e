#include <benchmark/benchmark.h>

#include <random>

#include "cdimc/finetune.hpp"
#include "cdimc/metrics.hpp"
#include "cdimc/optimizer.hpp"

using namespace cdimc;

namespace {

MultiViewDataset benchmark_data(Index n) {
  SyntheticSpec spec;
  spec.samples = n;
  spec.seed = 1;
  return standardize(make_incomplete(make_synthetic(spec), MaskSpec{MaskMode::PerViewRemoval, 0.3, 1}));
}

void BM_KnnGraph(benchmark::State& state) {
  const MultiViewDataset ds = benchmark_data(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_knn_graph(ds, 5));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KnnGraph)->Arg(300)->Arg(1000)->Arg(3000)->Complexity(benchmark::oNSquared);

void BM_KMeans(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  Matrix x(10, state.range(0));
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  KMeansOptions opts;
  opts.clusters = 10;
  opts.restarts = 1;
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(x, opts));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(10000);

void BM_Hungarian(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uniform;
  const Index k = state.range(0);
  Matrix cost(k, k);
  for (Index i = 0; i < cost.size(); ++i) cost.data()[i] = uniform(rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(cost));
}
BENCHMARK(BM_Hungarian)->Arg(10)->Arg(50)->Arg(200);

void BM_Accuracy(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 9);
  std::vector<int> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = pick(rng);
    b[i] = pick(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(accuracy(a, b));
}
BENCHMARK(BM_Accuracy)->Arg(10000);

// One forward/backward/update step on a default-size batch.
void BM_PretrainStep(benchmark::State& state) {
  const MultiViewDataset ds = benchmark_data(300);
  const NeighborGraph graph = build_knn_graph(ds, 5);
  const std::vector<TrainingBatch> batches = make_batches(ds, graph, state.range(0));
  NetworkShape shape;
  shape.view_dims = {ds.view_dim(0), ds.view_dim(1)};
  shape.code_dim = 3;
  MultiViewAutoencoder model(shape, 5);
  OptimizerConfig cfg;
  cfg.learning_rate = 1e-3;
  Optimizer opt(cfg, model.parameters());
  for (auto _ : state) {
    Tape tape;
    const PretrainLoss loss = pretrain_loss(tape, model, batches.front(), 1e-4);
    opt.zero_grad();
    tape.backward(loss.total);
    opt.step();
  }
}
BENCHMARK(BM_PretrainStep)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_FinetuneStep(benchmark::State& state) {
  const MultiViewDataset ds = benchmark_data(300);
  const NeighborGraph graph = build_knn_graph(ds, 5);
  const std::vector<TrainingBatch> batches = make_batches(ds, graph, 256);
  NetworkShape shape;
  shape.view_dims = {ds.view_dim(0), ds.view_dim(1)};
  shape.code_dim = 3;
  MultiViewAutoencoder model(shape, 6);
  const ClusterState cs = init_clusters(model.fused_codes(network_inputs(ds), mask_vectors(ds)), 3, KMeansOptions{});
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Adam;
  cfg.learning_rate = 1e-3;
  Optimizer opt(cfg, model.encoder_parameters());
  for (auto _ : state) {
    Tape tape;
    const FinetuneLoss loss = finetune_loss(tape, model, batches.front(), cs, 1e-4);
    opt.zero_grad();
    tape.backward(loss.total);
    opt.step();
  }
}
BENCHMARK(BM_FinetuneStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
