#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "app/commands.hpp"

using namespace cdimc;
using namespace cdimc::app;

int main(int argc, char** argv) {
  CLI::App app{"Clustering of multi-view data with missing views"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run the clustering pipeline for one or more seeds");
  std::string config_file, seed_list, out_dir;
  std::map<std::string, std::string> overrides;
  run->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--seed", seed_list, "seed list, e.g. 0-4 or 1,3,5 (same as --seeds)");
  run->add_option("--out", out_dir, "output directory");
  for (const ConfigKey& key : config_keys()) {
    if (key.name == "out") continue;
    run->add_option_function<std::string>(
        "--" + key.name, [&overrides, name = key.name](const std::string& v) { overrides[name] = v; }, key.help);
  }

  // mask
  auto* mask = app.add_subcommand("mask", "remove views from a complete dataset");
  std::string mask_in, mask_out, mask_mode = "per-view-removal";
  MaskSpec mask_spec;
  mask->add_option("--in", mask_in, "complete dataset directory")->required();
  mask->add_option("--out", mask_out, "output dataset directory")->required();
  mask->add_option("--mode", mask_mode, "per-view-removal | paired-subset")->capture_default_str();
  mask->add_option("--rate", mask_spec.rate, "missing-view rate p in [0, 1)")->required();
  mask->add_option("--seed", mask_spec.seed, "mask seed")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "score an assignment file against labels");
  std::string eval_assign, eval_labels;
  eval->add_option("--assignments", eval_assign, "index,cluster file")->required();
  eval->add_option("--labels", eval_labels, "labels file")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic multi-view dataset");
  SyntheticSpec synth_spec;
  std::string synth_out;
  std::optional<double> synth_rate;
  std::string synth_mode = "per-view-removal";
  std::uint64_t synth_mask_seed = 0;
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--clusters", synth_spec.clusters, "cluster count")->capture_default_str();
  synth->add_option("--views", synth_spec.views, "view count")->capture_default_str();
  synth->add_option("--samples", synth_spec.samples, "sample count")->capture_default_str();
  synth->add_option("--dims", synth_spec.dims, "per-view dimensions (one value is reused)")->delimiter(',');
  synth->add_option("--separation", synth_spec.separation, "cluster center scale")->capture_default_str();
  synth->add_option("--noise", synth_spec.view_noise, "per-view noise standard deviation")->capture_default_str();
  synth->add_option("--seed", synth_spec.seed, "data seed")->capture_default_str();
  synth->add_option("--missing-rate", synth_rate, "also mask the data at this rate");
  synth->add_option("--mask-mode", synth_mode, "per-view-removal | paired-subset")->capture_default_str();
  synth->add_option("--mask-seed", synth_mask_seed, "mask seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*run) {
      RunConfig config;
      if (!config_file.empty()) apply_config_file(config, config_file);
      for (const ConfigKey& key : config_keys()) {
        auto it = overrides.find(key.name);
        if (it == overrides.end()) continue;
        try {
          key.set(config, it->second);
        } catch (const ConfigError& e) {
          throw ConfigError("--" + std::string(e.what()));
        }
      }
      if (!seed_list.empty()) config.seeds = parse_seed_list(seed_list);
      if (!out_dir.empty()) config.out = out_dir;
      cmd_run(config, std::cout);
    } else if (*mask) {
      mask_spec.mode = parse_mask_mode(mask_mode);
      cmd_mask(mask_in, mask_spec, mask_out, std::cout);
    } else if (*eval) {
      cmd_eval(eval_assign, eval_labels, std::cout);
    } else if (*synth) {
      std::optional<MaskSpec> spec;
      if (synth_rate) spec = MaskSpec{parse_mask_mode(synth_mode), *synth_rate, synth_mask_seed};
      cmd_synth(synth_spec, spec, synth_out, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kOk;
}
