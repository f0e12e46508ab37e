#include "app/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cdimc/dataset_io.hpp"
#include "cdimc/graph.hpp"
#include "cdimc/metrics.hpp"

namespace cdimc::app {

namespace {

// Re-throws the active exception with a stage prefix, keeping its category.
[[noreturn]] void rethrow_in_stage(const std::string& stage) {
  const std::string ctx = "stage " + stage + ": ";
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const DataError& e) {
    throw DataError(ctx + e.what());
  } catch (const NumericError& e) {
    throw NumericError(ctx + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(ctx + e.what());
  } catch (const ContractError& e) {
    throw ContractError(ctx + e.what());
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  }
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    rethrow_in_stage(name);
  }
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
  if (!out) throw DataError("write failed for " + file.string());
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

MultiViewDataset prepare_dataset(const RunConfig& config, std::uint64_t seed) {
  MultiViewDataset ds = stage("load", [&] {
    if (!config.dataset.empty()) return load_dataset(config.dataset);
    SyntheticSpec spec = config.synth;
    spec.seed = config.synth_seed.value_or(seed);
    return make_synthetic(spec);
  });
  if (config.mask_mode && config.missing_rate > 0.0) {
    ds = stage("mask", [&] {
      if (!ds.complete())
        throw ConfigError("dataset already has missing views; set mask_mode = none or missing_rate = 0");
      return make_incomplete(ds, MaskSpec{*config.mask_mode, config.missing_rate, config.mask_seed.value_or(seed)});
    });
  }
  if (config.standardize) ds = stage("standardize", [&] { return standardize(ds); });
  return ds;
}

SeedResult run_seed(const RunConfig& config, std::uint64_t seed, const FinetuneObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  SeedResult result;
  result.seed = seed;

  const MultiViewDataset ds = prepare_dataset(config, seed);
  auto [arranged, order] = stage("rearrange", [&] { return rearrange(ds, config.kmeans_options(seed)); });
  const NeighborGraph graph = stage("graph", [&] { return build_knn_graph(arranged, config.knn); });
  PretrainResult pre = stage("pretrain", [&] { return run_pretrain(arranged, graph, config.clusters, config.pretrain_config(seed)); });
  if (!pre.epoch_losses.empty()) {
    result.pretrain_first_loss = pre.epoch_losses.front();
    result.pretrain_last_loss = pre.epoch_losses.back();
  }
  FinetuneResult fine = stage("finetune", [&] {
    return run_finetune(pre.model, arranged, graph, config.finetune_config(seed), observer);
  });

  result.assignment = order.restore(fine.assignment);
  result.iterations = static_cast<int>(fine.trace.size());
  result.stopped_early = fine.stopped_early;
  result.warnings = std::move(fine.warnings);
  result.trace = std::move(fine.trace);
  if (ds.labels) {
    stage("evaluate", [&] {
      result.acc = accuracy(result.assignment, *ds.labels);
      result.nmi = nmi(result.assignment, *ds.labels);
    });
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Aggregate aggregate(const std::vector<SeedResult>& seeds) {
  Aggregate agg;
  std::vector<double> accs, nmis;
  for (const SeedResult& s : seeds) {
    if (!s.acc || !s.nmi) continue;
    accs.push_back(*s.acc);
    nmis.push_back(*s.nmi);
  }
  agg.count = accs.size();
  if (accs.empty()) return agg;
  auto stats = [](const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(xs.size()));
  };
  stats(accs, agg.acc_mean, agg.acc_std);
  stats(nmis, agg.nmi_mean, agg.nmi_std);
  return agg;
}

std::string trace_jsonl(const SeedResult& result) {
  std::string out;
  for (const IterationRecord& r : result.trace) {
    nlohmann::ordered_json line;
    line["t"] = r.t;
    line["loss"] = r.loss;
    line["fit_loss"] = r.fit_loss;
    line["lambda_used"] = r.lambda_used;
    line["lambda"] = r.lambda;
    line["selected"] = r.selected;
    line["change"] = r.change;
    out += line.dump() + "\n";
  }
  return out;
}

nlohmann::ordered_json report_json(const RunReport& report, bool include_timing) {
  nlohmann::ordered_json j;
  j["complete"] = report.complete;
  if (!report.error.empty()) j["error"] = report.error;
  j["config"] = report.config;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
  for (const SeedResult& s : report.seeds) {
    nlohmann::ordered_json e;
    e["seed"] = s.seed;
    e["acc"] = s.acc ? nlohmann::ordered_json(*s.acc) : nlohmann::ordered_json(nullptr);
    e["nmi"] = s.nmi ? nlohmann::ordered_json(*s.nmi) : nlohmann::ordered_json(nullptr);
    e["iterations"] = s.iterations;
    e["stopped_early"] = s.stopped_early;
    e["pretrain_loss_first"] = s.pretrain_first_loss;
    e["pretrain_loss_last"] = s.pretrain_last_loss;
    e["warnings"] = s.warnings;
    e["assignments"] = "assignments_seed" + std::to_string(s.seed) + ".csv";
    e["trace"] = "trace_seed" + std::to_string(s.seed) + ".jsonl";
    if (include_timing) e["wall_seconds"] = s.wall_seconds;
    seeds.push_back(std::move(e));
  }
  j["seeds"] = std::move(seeds);
  nlohmann::ordered_json agg;
  agg["count"] = report.aggregate.count;
  agg["acc_mean"] = report.aggregate.acc_mean;
  agg["acc_std"] = report.aggregate.acc_std;
  agg["nmi_mean"] = report.aggregate.nmi_mean;
  agg["nmi_std"] = report.aggregate.nmi_std;
  j["aggregate"] = std::move(agg);
  return j;
}

std::string report_text(const RunReport& report) {
  std::ostringstream os;
  os << "status: " << (report.complete ? "complete" : "incomplete") << "\n";
  if (!report.error.empty()) os << "error: " << report.error << "\n";
  os << "\nseed      ACC       NMI  iterations  time_s\n";
  for (const SeedResult& s : report.seeds) {
    os << std::setw(4) << s.seed << "  " << std::setw(8) << (s.acc ? fixed(*s.acc, 4) : "-") << "  " << std::setw(8)
       << (s.nmi ? fixed(*s.nmi, 4) : "-") << "  " << std::setw(10) << s.iterations << "  " << std::setw(6)
       << fixed(s.wall_seconds, 2) << "\n";
    for (const std::string& w : s.warnings) os << "      warning: " << w << "\n";
  }
  const Aggregate& a = report.aggregate;
  if (a.count > 0) {
    os << "\nACC " << fixed(100.0 * a.acc_mean, 2) << " +/- " << fixed(100.0 * a.acc_std, 2) << " (%)\n";
    os << "NMI " << fixed(100.0 * a.nmi_mean, 2) << " +/- " << fixed(100.0 * a.nmi_std, 2) << " (%)\n";
  }
  os << "\n[config]\n" << report.config;
  return os.str();
}

RunReport run_experiment(const RunConfig& config, bool write_outputs) {
  config.validate();
  RunReport report;
  report.config = dump_config(config);
  auto flush = [&] {
    if (!write_outputs) return;
    report.aggregate = aggregate(report.seeds);
    write_text(config.out / "report.json", report_json(report).dump(2) + "\n");
    write_text(config.out / "report.txt", report_text(report));
  };
  if (write_outputs) {
    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    if (ec) throw DataError("cannot create output directory " + config.out.string() + ": " + ec.message());
  }
  for (std::uint64_t seed : config.seeds) {
    try {
      SeedResult r = run_seed(config, seed);
      if (write_outputs) {
        const std::string tag = std::to_string(seed);
        write_assignments(r.assignment, config.out / ("assignments_seed" + tag + ".csv"));
        write_text(config.out / ("trace_seed" + tag + ".jsonl"), trace_jsonl(r));
      }
      report.seeds.push_back(std::move(r));
    } catch (const std::exception& e) {
      report.error = "seed " + std::to_string(seed) + ": " + e.what();
      flush();
      throw;
    }
  }
  report.complete = true;
  report.aggregate = aggregate(report.seeds);
  flush();
  return report;
}

}  // namespace cdimc::app
