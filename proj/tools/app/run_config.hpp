#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cdimc/dataset.hpp"
#include "cdimc/finetune.hpp"
#include "cdimc/pretrain.hpp"

namespace cdimc::app {

// Everything a `run` needs. Seed-dependent pieces (synthetic data, mask,
// network init, kmeans) use the run seed unless pinned.
struct RunConfig {
  std::filesystem::path dataset;  // empty: synthesize
  SyntheticSpec synth;
  std::optional<std::uint64_t> synth_seed;

  std::optional<MaskMode> mask_mode = MaskMode::PerViewRemoval;  // nullopt: use data as is
  double missing_rate = 0.3;
  std::optional<std::uint64_t> mask_seed;

  int clusters = 3;
  int knn = 5;
  bool standardize = true;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 100;

  double alpha = 1e-4;
  bool pretrain = true;  // false: fine-tune from random encoders
  double pretrain_lr = PretrainConfig{}.learning_rate;
  int pretrain_epochs = PretrainConfig{}.epochs;
  Index pretrain_batch_size = PretrainConfig{}.batch_size;
  Index wide_width = 1500;
  DecoderInput decoder_input = DecoderInput::Fused;

  double finetune_lr = 1e-3;
  int max_outer = 50;
  int max_inner = 5;
  Index batch_size = 256;
  double stop_threshold = 1e-3;
  bool self_paced = true;

  std::vector<std::uint64_t> seeds = {0};
  std::filesystem::path out = "out";

  void validate() const;
  PretrainConfig pretrain_config(std::uint64_t seed) const;
  FinetuneConfig finetune_config(std::uint64_t seed) const;
  KMeansOptions kmeans_options(std::uint64_t seed) const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

// Sets one key from its text form. Unknown keys and bad values throw ConfigError.
void set_key(RunConfig& config, const std::string& key, const std::string& value);

// Flat `key = value` lines; `#` starts a comment. Errors carry file:line.
void apply_config_file(RunConfig& config, const std::filesystem::path& file);
void apply_config_text(RunConfig& config, const std::string& text, const std::string& origin);

// Canonical `key = value` dump in key-table order.
std::string dump_config(const RunConfig& config);

// "0,3,7", "0-4" and mixtures such as "1,5-7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace cdimc::app
