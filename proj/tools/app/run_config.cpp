#include "app/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cdimc/dataset_io.hpp"

namespace cdimc::app {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": cannot parse '" + text + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(value)) throw ConfigError(key + ": value must be finite");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + text + "'");
}

std::optional<std::uint64_t> parse_optional_seed(const std::string& key, const std::string& text) {
  if (trim(text) == "run") return std::nullopt;
  return parse_number<std::uint64_t>(key, text);
}

std::string show_optional_seed(const std::optional<std::uint64_t>& seed) {
  return seed ? std::to_string(*seed) : "run";
}

std::vector<Index> parse_dims(const std::string& key, const std::string& text) {
  std::vector<Index> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(parse_number<Index>(key, item));
  if (dims.empty()) throw ConfigError(key + ": empty list");
  return dims;
}

std::string show_bool(bool b) { return b ? "true" : "false"; }

template <typename T>
std::string show(T value) {
  if constexpr (std::is_floating_point_v<T>)
    return format_double(static_cast<double>(value));
  else
    return std::to_string(value);
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  auto add = [&k](std::string name, std::string help, auto set, auto get) {
    k.push_back(ConfigKey{std::move(name), std::move(help), set, get});
  };
  add("dataset", "dataset directory (view_<v>.csv, mask.csv, labels.csv); empty synthesizes one",
      [](RunConfig& c, const std::string& v) { c.dataset = trim(v); },
      [](const RunConfig& c) { return c.dataset.string(); });
  add("synth_clusters", "synthetic cluster count",
      [](RunConfig& c, const std::string& v) { c.synth.clusters = parse_number<int>("synth_clusters", v); },
      [](const RunConfig& c) { return show(c.synth.clusters); });
  add("synth_views", "synthetic view count",
      [](RunConfig& c, const std::string& v) { c.synth.views = parse_number<int>("synth_views", v); },
      [](const RunConfig& c) { return show(c.synth.views); });
  add("synth_samples", "synthetic sample count",
      [](RunConfig& c, const std::string& v) { c.synth.samples = parse_number<Index>("synth_samples", v); },
      [](const RunConfig& c) { return show(c.synth.samples); });
  add("synth_dims", "per-view feature dimensions, comma separated (one value is reused)",
      [](RunConfig& c, const std::string& v) { c.synth.dims = parse_dims("synth_dims", v); },
      [](const RunConfig& c) {
        std::string s;
        for (std::size_t i = 0; i < c.synth.dims.size(); ++i) s += (i ? "," : "") + std::to_string(c.synth.dims[i]);
        return s;
      });
  add("synth_separation", "distance scale between synthetic cluster centers",
      [](RunConfig& c, const std::string& v) { c.synth.separation = parse_number<double>("synth_separation", v); },
      [](const RunConfig& c) { return show(c.synth.separation); });
  add("synth_noise", "per-view additive noise standard deviation",
      [](RunConfig& c, const std::string& v) { c.synth.view_noise = parse_number<double>("synth_noise", v); },
      [](const RunConfig& c) { return show(c.synth.view_noise); });
  add("synth_seed", "synthetic data seed, or 'run' to use the run seed",
      [](RunConfig& c, const std::string& v) { c.synth_seed = parse_optional_seed("synth_seed", v); },
      [](const RunConfig& c) { return show_optional_seed(c.synth_seed); });
  add("mask_mode", "none | per-view-removal | paired-subset",
      [](RunConfig& c, const std::string& v) {
        const std::string t = trim(v);
        try {
          c.mask_mode = t == "none" ? std::nullopt : std::optional<MaskMode>(parse_mask_mode(t));
        } catch (const ConfigError& e) {
          throw ConfigError(std::string("mask_mode: ") + e.what());
        }
      },
      [](const RunConfig& c) { return c.mask_mode ? to_string(*c.mask_mode) : std::string("none"); });
  add("missing_rate", "missing-view rate p in [0, 1)",
      [](RunConfig& c, const std::string& v) { c.missing_rate = parse_number<double>("missing_rate", v); },
      [](const RunConfig& c) { return show(c.missing_rate); });
  add("mask_seed", "mask seed, or 'run' to use the run seed",
      [](RunConfig& c, const std::string& v) { c.mask_seed = parse_optional_seed("mask_seed", v); },
      [](const RunConfig& c) { return show_optional_seed(c.mask_seed); });
  add("clusters", "cluster count k (also the code width)",
      [](RunConfig& c, const std::string& v) { c.clusters = parse_number<int>("clusters", v); },
      [](const RunConfig& c) { return show(c.clusters); });
  add("knn", "neighbors per instance in the per-view graphs",
      [](RunConfig& c, const std::string& v) { c.knn = parse_number<int>("knn", v); },
      [](const RunConfig& c) { return show(c.knn); });
  add("standardize", "z-score each feature over available instances",
      [](RunConfig& c, const std::string& v) { c.standardize = parse_bool("standardize", v); },
      [](const RunConfig& c) { return show_bool(c.standardize); });
  add("kmeans_restarts", "kmeans restarts (rearrangement and cluster init)",
      [](RunConfig& c, const std::string& v) { c.kmeans_restarts = parse_number<int>("kmeans_restarts", v); },
      [](const RunConfig& c) { return show(c.kmeans_restarts); });
  add("kmeans_max_iter", "kmeans Lloyd iterations per restart",
      [](RunConfig& c, const std::string& v) { c.kmeans_max_iter = parse_number<int>("kmeans_max_iter", v); },
      [](const RunConfig& c) { return show(c.kmeans_max_iter); });
  add("alpha", "graph embedding weight",
      [](RunConfig& c, const std::string& v) { c.alpha = parse_number<double>("alpha", v); },
      [](const RunConfig& c) { return show(c.alpha); });
  add("pretrain", "run autoencoder pre-training (false: fine-tune from random encoders)",
      [](RunConfig& c, const std::string& v) { c.pretrain = parse_bool("pretrain", v); },
      [](const RunConfig& c) { return show_bool(c.pretrain); });
  add("pretrain_lr", "pre-training SGD learning rate",
      [](RunConfig& c, const std::string& v) { c.pretrain_lr = parse_number<double>("pretrain_lr", v); },
      [](const RunConfig& c) { return show(c.pretrain_lr); });
  add("pretrain_epochs", "pre-training epochs",
      [](RunConfig& c, const std::string& v) { c.pretrain_epochs = parse_number<int>("pretrain_epochs", v); },
      [](const RunConfig& c) { return show(c.pretrain_epochs); });
  add("pretrain_batch_size", "pre-training batch size",
      [](RunConfig& c, const std::string& v) { c.pretrain_batch_size = parse_number<Index>("pretrain_batch_size", v); },
      [](const RunConfig& c) { return show(c.pretrain_batch_size); });
  add("wide_width", "width of the wide hidden layer",
      [](RunConfig& c, const std::string& v) { c.wide_width = parse_number<Index>("wide_width", v); },
      [](const RunConfig& c) { return show(c.wide_width); });
  add("decoder_input", "fused | view: what the decoders reconstruct from",
      [](RunConfig& c, const std::string& v) {
        try {
          c.decoder_input = parse_decoder_input(trim(v));
        } catch (const ConfigError& e) {
          throw ConfigError(std::string("decoder_input: ") + e.what());
        }
      },
      [](const RunConfig& c) { return to_string(c.decoder_input); });
  add("finetune_lr", "fine-tuning Adam learning rate",
      [](RunConfig& c, const std::string& v) { c.finetune_lr = parse_number<double>("finetune_lr", v); },
      [](const RunConfig& c) { return show(c.finetune_lr); });
  add("max_outer", "maximum outer iterations T",
      [](RunConfig& c, const std::string& v) { c.max_outer = parse_number<int>("max_outer", v); },
      [](const RunConfig& c) { return show(c.max_outer); });
  add("max_inner", "inner epochs per outer iteration",
      [](RunConfig& c, const std::string& v) { c.max_inner = parse_number<int>("max_inner", v); },
      [](const RunConfig& c) { return show(c.max_inner); });
  add("batch_size", "fine-tuning batch size",
      [](RunConfig& c, const std::string& v) { c.batch_size = parse_number<Index>("batch_size", v); },
      [](const RunConfig& c) { return show(c.batch_size); });
  add("stop_threshold", "stop once the fraction of changed assignments is below this",
      [](RunConfig& c, const std::string& v) { c.stop_threshold = parse_number<double>("stop_threshold", v); },
      [](const RunConfig& c) { return show(c.stop_threshold); });
  add("self_paced", "self-paced sample selection (false: every sample weighted 1)",
      [](RunConfig& c, const std::string& v) { c.self_paced = parse_bool("self_paced", v); },
      [](const RunConfig& c) { return show_bool(c.self_paced); });
  add("seeds", "run seeds, e.g. 0-4 or 1,3,5",
      [](RunConfig& c, const std::string& v) { c.seeds = parse_seed_list(v); },
      [](const RunConfig& c) {
        std::string s;
        for (std::size_t i = 0; i < c.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(c.seeds[i]);
        return s;
      });
  add("out", "output directory",
      [](RunConfig& c, const std::string& v) { c.out = trim(v); },
      [](const RunConfig& c) { return c.out.string(); });
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_key(RunConfig& config, const std::string& key, const std::string& value) {
  for (const ConfigKey& k : config_keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    try {
      set_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(config, buffer.str(), file.string());
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const ConfigKey& k : config_keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(parse_number<std::uint64_t>("seeds", item));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>("seeds", item.substr(0, dash));
    const auto hi = parse_number<std::uint64_t>("seeds", item.substr(dash + 1));
    if (hi < lo) throw ConfigError("seeds: empty range '" + item + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("seeds: empty list");
  return seeds;
}

void RunConfig::validate() const {
  if (clusters < 2) throw ConfigError("clusters must be at least 2");
  if (knn < 1) throw ConfigError("knn must be positive");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("missing_rate must lie in [0, 1)");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t j = i + 1; j < seeds.size(); ++j)
      if (seeds[i] == seeds[j]) throw ConfigError("seed " + std::to_string(seeds[i]) + " listed twice");
  if (dataset.empty()) {
    if (synth.clusters != clusters)
      throw ConfigError("synth_clusters (" + std::to_string(synth.clusters) + ") differs from clusters (" +
                        std::to_string(clusters) + ")");
    if (synth.views < 1 || synth.samples < 1) throw ConfigError("synthetic views and samples must be positive");
    if (!(synth.separation >= 0.0) || !(synth.view_noise >= 0.0))
      throw ConfigError("synthetic separation and noise must be non-negative");
  }
  pretrain_config(0).validate();
  finetune_config(0).validate();
}

PretrainConfig RunConfig::pretrain_config(std::uint64_t seed) const {
  PretrainConfig p;
  p.alpha = alpha;
  p.learning_rate = pretrain_lr;
  p.epochs = pretrain ? pretrain_epochs : 0;
  p.batch_size = pretrain_batch_size;
  p.seed = seed;
  p.wide_width = wide_width;
  p.decoder_input = decoder_input;
  return p;
}

FinetuneConfig RunConfig::finetune_config(std::uint64_t seed) const {
  FinetuneConfig f;
  f.alpha = alpha;
  f.learning_rate = finetune_lr;
  f.max_outer = max_outer;
  f.max_inner = max_inner;
  f.batch_size = batch_size;
  f.stop_threshold = stop_threshold;
  f.seed = seed;
  f.self_paced = self_paced;
  f.kmeans_restarts = kmeans_restarts;
  f.kmeans_max_iterations = kmeans_max_iter;
  return f;
}

KMeansOptions RunConfig::kmeans_options(std::uint64_t seed) const {
  KMeansOptions k;
  k.clusters = clusters;
  k.restarts = kmeans_restarts;
  k.max_iterations = kmeans_max_iter;
  k.seed = seed;
  return k;
}

}  // namespace cdimc::app
