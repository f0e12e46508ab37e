#include <gtest/gtest.h>

#include <random>

#include "cdimc/finetune.hpp"
#include "oracles.hpp"

using namespace cdimc;

namespace {

struct Pipeline {
  MultiViewDataset ds;
  NeighborGraph graph;
  MultiViewAutoencoder model;
};

Pipeline small_run(std::uint64_t seed, Index n = 60, int pretrain_epochs = 20, Index width = 32, double separation = 4.0) {
  SyntheticSpec spec;
  spec.samples = n;
  spec.separation = separation;
  spec.seed = seed;
  MultiViewDataset ds = standardize(make_incomplete(make_synthetic(spec), MaskSpec{MaskMode::PerViewRemoval, 0.3, seed}));
  KMeansOptions km;
  km.clusters = 3;
  km.seed = seed;
  Pipeline s;
  s.ds = rearrange(ds, km).first;
  s.graph = build_knn_graph(s.ds, 5);
  PretrainConfig cfg;
  cfg.seed = seed;
  cfg.epochs = pretrain_epochs;
  cfg.wide_width = width;
  if (width == 32) cfg.batch_size = 16;
  s.model = run_pretrain(s.ds, s.graph, 3, cfg).model;
  return s;
}

ClusterState random_state(Index n, int k, std::mt19937_64& rng) {
  ClusterState st;
  st.centers = oracle::random_matrix(k, k, rng);
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::bernoulli_distribution keep(0.6);
  for (Index i = 0; i < n; ++i) {
    st.assignment.push_back(pick(rng));
    st.weights.push_back(keep(rng) ? 1 : 0);
  }
  st.lambda = 0.8;
  return st;
}

double direct_finetune_loss(const MultiViewAutoencoder& model, const TrainingBatch& batch, const NeighborGraph& graph,
                            const ClusterState& st, double alpha) {
  const std::size_t l = model.views();
  const double b = static_cast<double>(batch.size());
  const double k = static_cast<double>(model.code_dim());
  std::vector<Matrix> codes;
  Matrix fused = Matrix::Zero(model.code_dim(), batch.size());
  Vector count = Vector::Zero(batch.size());
  for (std::size_t v = 0; v < l; ++v) {
    codes.push_back(model.encoder(v).forward(batch.inputs[v]));
    for (Index i = 0; i < batch.size(); ++i)
      if (batch.masks[v][i] != 0.0) {
        fused.col(i) += codes[v].col(i);
        count[i] += 1.0;
      }
  }
  double cluster = 0.0;
  for (Index i = 0; i < batch.size(); ++i) {
    const auto idx = static_cast<std::size_t>(batch.begin + i);
    if (!st.weights[idx]) continue;
    const Vector h = fused.col(i) / count[i];
    cluster += (h - st.centers.col(st.assignment[idx])).squaredNorm() - st.lambda;
  }
  double graph_term = 0.0;
  for (std::size_t v = 0; v < l; ++v)
    graph_term += oracle::graph_double_sum(codes[v], oracle::dense_adjacency(graph.views[v]), batch.begin);
  return cluster / (b * k) + alpha / (b * static_cast<double>(l)) * graph_term;
}

struct TinyModel {
  MultiViewDataset ds;
  NeighborGraph graph;
  MultiViewAutoencoder model;
};

TinyModel tiny(std::uint64_t seed, Index n = 8) {
  std::mt19937_64 rng(seed);
  TinyModel t;
  t.ds = oracle::random_incomplete({5, 3}, n, 0.3, rng);
  t.graph = build_knn_graph(t.ds, 2);
  NetworkShape shape;
  shape.view_dims = {5, 3};
  shape.code_dim = 2;
  shape.wide_width = 6;
  t.model = MultiViewAutoencoder(shape, seed);
  for (Parameter* p : t.model.parameters())
    if (p->value.cols() == 1) p->value = oracle::random_matrix(p->value.rows(), 1, rng, -0.1, 0.1);
  return t;
}

}  // namespace

TEST(InitClusters, DistinctPointsAreOwnClusters) {
  std::mt19937_64 rng(1);
  const Matrix h = oracle::random_matrix(3, 3, rng);
  KMeansOptions km;
  const ClusterState st = init_clusters(h, 3, km);
  EXPECT_NEAR(st.losses.sum(), 0.0, 1e-24);
  EXPECT_EQ(st.weights, std::vector<std::uint8_t>(3, 1));
  std::set<int> used(st.assignment.begin(), st.assignment.end());
  EXPECT_EQ(used.size(), 3u);
}

TEST(InitClusters, DuplicatedPointsGiveExactCenters) {
  Matrix h(2, 4);
  h << 0, 0, 3, 3, 1, 1, -2, -2;
  const ClusterState st = init_clusters(h, 2, KMeansOptions{});
  EXPECT_EQ(st.losses.sum(), 0.0);
  EXPECT_EQ(st.assignment, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(st.lambda, 0.0);
}

TEST(InitClusters, LambdaStartsAtMeanLoss) {
  std::mt19937_64 rng(2);
  const Matrix h = oracle::random_matrix(3, 30, rng);
  const ClusterState st = init_clusters(h, 3, KMeansOptions{});
  EXPECT_DOUBLE_EQ(st.lambda, st.losses.mean());
  for (Index i = 0; i < 30; ++i)
    EXPECT_NEAR(st.losses[i], (h.col(i) - st.centers.col(st.assignment[static_cast<std::size_t>(i)])).squaredNorm(), 1e-14);
}

TEST(InitClusters, MoreClustersThanSamplesIsConfigError) {
  EXPECT_THROW(init_clusters(Matrix::Zero(3, 2), 3, KMeansOptions{}), ConfigError);
}

TEST(AssignClusters, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix h = oracle::random_matrix(4, 20, rng);
    const Matrix u = oracle::random_matrix(4, 4, rng);
    const auto s = assign_clusters(h, u);
    for (Index i = 0; i < 20; ++i) ASSERT_EQ(s[static_cast<std::size_t>(i)], oracle::brute_argmin(h, i, u));
  }
}

TEST(AssignClusters, PointOnCenterAndTieRule) {
  Matrix u(1, 3);
  u << -1.0, 7.0, 1.0;
  Matrix h(1, 2);
  h << 7.0, 0.0;  // second point equidistant from centers 0 and 2
  EXPECT_EQ(assign_clusters(h, u), (std::vector<int>{1, 0}));
}

TEST(UpdateWeights, Thresholding) {
  Vector loss(3);
  loss << 0.1, 0.5, 0.9;
  EXPECT_EQ(update_weights(loss, 0.5), (std::vector<std::uint8_t>{1, 1, 0}));
  EXPECT_EQ(update_weights(loss, 0.9), (std::vector<std::uint8_t>{1, 1, 1}));
  EXPECT_EQ(update_weights(loss, 0.05), (std::vector<std::uint8_t>{0, 0, 0}));
  std::mt19937_64 rng(4);
  const Matrix random = oracle::random_matrix(50, 1, rng, 0.0, 2.0);
  const auto r = update_weights(random.col(0), 1.0);
  for (Index i = 0; i < 50; ++i) EXPECT_EQ(r[static_cast<std::size_t>(i)], random(i, 0) <= 1.0 ? 1 : 0);
}

TEST(UpdateLambda, ConstantLossesAndEndpoint) {
  const Vector c = Vector::Constant(5, 0.3);
  for (int t = 1; t <= 4; ++t) EXPECT_DOUBLE_EQ(update_lambda(c, t, 4), 0.3);
  Vector loss(4);
  loss << 1, 2, 3, 4;
  const std::vector<double> xs{1, 2, 3, 4};
  EXPECT_NEAR(update_lambda(loss, 4, 4), oracle::mean(xs) + oracle::population_std(xs), 1e-15);
}

TEST(UpdateLambda, ExampleUsesPopulationStd) {
  Vector loss(4);
  loss << 1, 2, 3, 4;
  const std::vector<double> xs{1, 2, 3, 4};
  EXPECT_NEAR(update_lambda(loss, 2, 4), 2.5 + 0.5 * oracle::population_std(xs), 1e-15);
  EXPECT_NEAR(update_lambda(loss, 2, 4), 2.5 + 0.5 * std::sqrt(1.25), 1e-15);
}

TEST(UpdateLambda, Contracts) {
  EXPECT_THROW(update_lambda(Vector(0), 1, 2), ContractError);
  EXPECT_THROW(update_lambda(Vector::Ones(3), 0, 2), ContractError);
  EXPECT_THROW(update_lambda(Vector::Ones(3), 3, 2), ContractError);
}

TEST(ChangeFraction, MatchesDirectComparison) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> a(40), b(40);
    int same = 0;
    for (std::size_t i = 0; i < 40; ++i) {
      a[i] = pick(rng);
      b[i] = pick(rng);
      same += a[i] == b[i];
    }
    EXPECT_DOUBLE_EQ(change_fraction(a, b), 1.0 - same / 40.0);
  }
  EXPECT_THROW(change_fraction({1, 2}, {1}), ContractError);
}

TEST(FinetuneLoss, EqualsDirectFormula) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TinyModel t = tiny(50 + seed, 11);
    std::mt19937_64 rng(seed);
    const ClusterState st = random_state(11, 2, rng);
    for (const TrainingBatch& batch : make_batches(t.ds, t.graph, 4)) {
      Tape tape;
      const double got = finetune_loss(tape, t.model, batch, st, 0.3).total.value()(0, 0);
      EXPECT_LT(oracle::relative_error(got, direct_finetune_loss(t.model, batch, t.graph, st, 0.3)), 1e-10);
    }
  }
}

TEST(FinetuneLoss, GradientMatchesFiniteDifferences) {
  TinyModel t = tiny(60);
  std::mt19937_64 rng(60);
  const ClusterState st = random_state(8, 2, rng);
  const TrainingBatch batch = make_batches(t.ds, t.graph, 8).front();
  for (Parameter* p : t.model.encoder_parameters()) p->zero_grad();
  Tape tape;
  tape.backward(finetune_loss(tape, t.model, batch, st, 0.5).total);
  double worst = 0.0;
  for (Parameter* p : t.model.encoder_parameters()) {
    const Matrix numeric = oracle::numeric_gradient(
        [&] {
          Tape probe;
          return finetune_loss(probe, t.model, batch, st, 0.5).total.value()(0, 0);
        },
        p->value);
    worst = std::max(worst, oracle::relative_error(p->grad, numeric));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(FinetuneLoss, NothingSelectedAndZeroAlphaGivesZero) {
  TinyModel t = tiny(61);
  std::mt19937_64 rng(61);
  ClusterState st = random_state(8, 2, rng);
  st.weights.assign(8, 0);
  const TrainingBatch batch = make_batches(t.ds, t.graph, 8).front();
  for (Parameter* p : t.model.encoder_parameters()) p->zero_grad();
  Tape tape;
  Var loss = finetune_loss(tape, t.model, batch, st, 0.0).total;
  EXPECT_EQ(loss.value()(0, 0), 0.0);
  tape.backward(loss);
  for (Parameter* p : t.model.encoder_parameters()) EXPECT_EQ(p->grad, Matrix::Zero(p->grad.rows(), p->grad.cols()));
}

TEST(FinetuneLoss, SampleAtItsCenterGivesMinusLambdaOverK) {
  TinyModel t = tiny(62, 6);
  TrainingBatch batch = make_batches(t.ds, t.graph, 3).front();
  batch.end = 1;  // a single-sample batch
  for (std::size_t v = 0; v < 2; ++v) {
    batch.inputs[v] = batch.inputs[v].leftCols(1).eval();
    batch.masks[v] = batch.masks[v].head(1).eval();
    batch.laplacians[v] = SparseMatrix(1, 1);
  }
  ClusterState st;
  st.centers = Matrix::Zero(2, 2);
  st.centers.col(1) = t.model.fused_codes(batch.inputs, batch.masks).col(0);
  st.assignment = {1, 0, 0, 0, 0, 0};
  st.weights = {1, 0, 0, 0, 0, 0};
  st.lambda = 0.42;
  Tape tape;
  const FinetuneLoss loss = finetune_loss(tape, t.model, batch, st, 0.0);
  EXPECT_NEAR(loss.total.value()(0, 0), -0.42 / 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(loss.offset, -0.42 / 2.0);
}

TEST(FinetuneLoss, ExcludedSamplesContributeExactlyZeroGradient) {
  TinyModel t = tiny(63, 10);
  std::mt19937_64 rng(63);
  const ClusterState st = random_state(10, 2, rng);
  const TrainingBatch batch = make_batches(t.ds, t.graph, 10).front();
  auto gradients = [&](const TrainingBatch& b) {
    for (Parameter* p : t.model.encoder_parameters()) p->zero_grad();
    Tape tape;
    tape.backward(finetune_loss(tape, t.model, b, st, 0.0).total);
    std::vector<Matrix> out;
    for (Parameter* p : t.model.encoder_parameters()) out.push_back(p->grad);
    return out;
  };
  const auto base = gradients(batch);
  TrainingBatch perturbed = batch;
  int excluded = 0;
  for (Index i = 0; i < 10; ++i) {
    if (st.weights[static_cast<std::size_t>(i)]) continue;
    ++excluded;
    for (std::size_t v = 0; v < 2; ++v)
      if (perturbed.masks[v][i] != 0.0) perturbed.inputs[v].col(i) = oracle::random_matrix(perturbed.inputs[v].rows(), 1, rng, -5, 5);
  }
  ASSERT_GT(excluded, 0);
  EXPECT_EQ(gradients(perturbed), base);
}

TEST(RunFinetune, NoInnerUpdatesKeepsInitialAssignment) {
  Pipeline s = small_run(1, 45, 5);
  FinetuneConfig cfg;
  cfg.max_outer = 1;
  cfg.max_inner = 0;
  const FinetuneResult r = run_finetune(s.model, s.ds, s.graph, cfg);
  EXPECT_EQ(r.assignment, r.initial_assignment);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].change, 0.0);
}

TEST(RunFinetune, ThresholdOneStopsAfterFirstIteration) {
  Pipeline s = small_run(2, 45, 5);
  FinetuneConfig cfg;
  cfg.stop_threshold = 1.0;
  cfg.max_inner = 1;
  const FinetuneResult r = run_finetune(s.model, s.ds, s.graph, cfg);
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_TRUE(r.stopped_early);
}

TEST(RunFinetune, PerIterationInvariants) {
  Pipeline s = small_run(3);
  FinetuneConfig cfg;
  cfg.max_outer = 8;
  cfg.max_inner = 2;
  cfg.stop_threshold = 1e-9;
  cfg.batch_size = 16;
  Matrix initial_centers;
  std::vector<int> previous;
  int iterations = 0;
  const MultiViewAutoencoder& model = s.model;
  const FinetuneResult r = run_finetune(s.model, s.ds, s.graph, cfg, [&](const IterationSnapshot& snap) {
    ++iterations;
    const ClusterState& st = snap.state;
    if (iterations == 1) initial_centers = st.centers;
    EXPECT_EQ(st.centers, initial_centers);
    // Codes handed to the observer are the current full-data fused codes.
    EXPECT_EQ(snap.fused, model.fused_codes(network_inputs(s.ds), mask_vectors(s.ds)));
    for (Index i = 0; i < snap.fused.cols(); ++i) {
      const auto idx = static_cast<std::size_t>(i);
      ASSERT_EQ(st.assignment[idx], oracle::brute_argmin(snap.fused, i, st.centers));
      const double kloss = (snap.fused.col(i) - st.centers.col(st.assignment[idx])).squaredNorm();
      EXPECT_NEAR(st.losses[i], kloss, 1e-12);
      EXPECT_EQ(st.weights[idx] == 1, st.losses[i] <= snap.record.lambda_used);
    }
    std::vector<double> xs(st.losses.data(), st.losses.data() + st.losses.size());
    EXPECT_NEAR(snap.record.lambda, oracle::mean(xs) + snap.record.t * oracle::population_std(xs) / cfg.max_outer, 1e-12);
    if (!previous.empty()) EXPECT_DOUBLE_EQ(snap.record.change, change_fraction(previous, st.assignment));
    previous = st.assignment;
  });
  EXPECT_EQ(iterations, static_cast<int>(r.trace.size()));
  EXPECT_EQ(r.state.centers, initial_centers);
}

TEST(RunFinetune, DisablingSelfPaceKeepsAllWeights) {
  Pipeline s = small_run(4, 45, 5);
  FinetuneConfig cfg;
  cfg.self_paced = false;
  cfg.max_outer = 3;
  cfg.max_inner = 1;
  cfg.stop_threshold = 1e-9;
  run_finetune(s.model, s.ds, s.graph, cfg, [](const IterationSnapshot& snap) {
    for (std::uint8_t w : snap.state.weights) EXPECT_EQ(w, 1);
    EXPECT_EQ(snap.record.selected, static_cast<Index>(snap.state.weights.size()));
  });
}

TEST(RunFinetune, DeterministicPerSeed) {
  Pipeline a = small_run(5, 45, 5);
  Pipeline b = small_run(5, 45, 5);
  FinetuneConfig cfg;
  cfg.max_outer = 3;
  cfg.max_inner = 1;
  const FinetuneResult ra = run_finetune(a.model, a.ds, a.graph, cfg);
  const FinetuneResult rb = run_finetune(b.model, b.ds, b.graph, cfg);
  EXPECT_EQ(ra.assignment, rb.assignment);
  ASSERT_EQ(ra.trace.size(), rb.trace.size());
  for (std::size_t i = 0; i < ra.trace.size(); ++i) EXPECT_EQ(ra.trace[i].loss, rb.trace[i].loss);
  EXPECT_TRUE(a.model == b.model);
}

TEST(RunFinetune, OnlyEncodersAreUpdated) {
  Pipeline s = small_run(6, 45, 5);
  const MultiViewAutoencoder before = s.model;
  FinetuneConfig cfg;
  cfg.max_outer = 2;
  cfg.max_inner = 1;
  run_finetune(s.model, s.ds, s.graph, cfg);
  for (std::size_t v = 0; v < 2; ++v) {
    for (std::size_t j = 0; j < s.model.decoder(v).layers().size(); ++j) {
      EXPECT_EQ(s.model.decoder(v).layers()[j].weight.value, before.decoder(v).layers()[j].weight.value);
      EXPECT_EQ(s.model.decoder(v).layers()[j].bias.value, before.decoder(v).layers()[j].bias.value);
    }
  }
  EXPECT_FALSE(s.model == before);
}

TEST(RunFinetune, DivergenceReportsIteration) {
  Pipeline s = small_run(7, 45, 2);
  FinetuneConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.max_outer = 3;
  try {
    run_finetune(s.model, s.ds, s.graph, cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos) << e.what();
  }
}

TEST(RunFinetune, SelectedCountMostlyNonDecreasing) {
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // Default network and schedule on well-separated blobs.
    Pipeline s = small_run(seed, 150, PretrainConfig{}.epochs, 1500, 8.0);
    FinetuneConfig cfg;
    cfg.max_outer = 10;
    cfg.max_inner = 2;
    cfg.seed = seed;
    const FinetuneResult r = run_finetune(s.model, s.ds, s.graph, cfg);
    bool ok = true;
    for (std::size_t i = 1; i < r.trace.size(); ++i) ok = ok && r.trace[i].selected >= r.trace[i - 1].selected;
    monotone += ok ? 1 : 0;
  }
  EXPECT_GE(monotone, 8);
}

TEST(FinetuneConfig, Validation) {
  FinetuneConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.max_outer = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = FinetuneConfig{};
  cfg.stop_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = FinetuneConfig{};
  cfg.learning_rate = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
