#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "app/run_config.hpp"
#include "cdimc/finetune.hpp"

namespace cdimc::app {

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<double> acc;  // absent when the dataset has no labels
  std::optional<double> nmi;
  int iterations = 0;
  bool stopped_early = false;
  double pretrain_first_loss = 0.0;  // mean epoch losses; 0 without pre-training
  double pretrain_last_loss = 0.0;
  std::vector<std::string> warnings;
  std::vector<IterationRecord> trace;
  Labels assignment;  // cluster per sample in the original sample order
  double wall_seconds = 0.0;  // not part of the deterministic output
};

struct Aggregate {
  std::size_t count = 0;  // seeds with labels
  double acc_mean = 0.0, acc_std = 0.0;
  double nmi_mean = 0.0, nmi_std = 0.0;
};

struct RunReport {
  std::string config;  // dump_config() of the effective configuration
  std::vector<SeedResult> seeds;
  Aggregate aggregate;
  bool complete = false;
  std::string error;  // first failure when incomplete
};

// Dataset for one seed after loading or synthesis, masking and optional
// standardization, in the original sample order.
MultiViewDataset prepare_dataset(const RunConfig& config, std::uint64_t seed);

// rearrange -> kNN graph -> pretrain -> finetune -> evaluate for one seed.
// `observer` sees every fine-tuning iteration (rearranged sample order).
SeedResult run_seed(const RunConfig& config, std::uint64_t seed, const FinetuneObserver& observer = {});

// Mean and population standard deviation over the seeds that carry metrics.
Aggregate aggregate(const std::vector<SeedResult>& seeds);

// Runs every configured seed in order. With `write_outputs`, writes
// report.txt, report.json, assignments_seed<S>.csv and trace_seed<S>.jsonl
// under config.out; if a seed fails the report is still written, marked
// incomplete, and the error is rethrown.
RunReport run_experiment(const RunConfig& config, bool write_outputs = true);

nlohmann::ordered_json report_json(const RunReport& report, bool include_timing = true);
std::string report_text(const RunReport& report);
std::string trace_jsonl(const SeedResult& result);

}  // namespace cdimc::app
