#include "app/commands.hpp"

#include <iomanip>

#include "cdimc/dataset_io.hpp"
#include "cdimc/metrics.hpp"

namespace cdimc::app {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const DataError*>(&e)) return kData;
  if (dynamic_cast<const NumericError*>(&e)) return kNumeric;
  return kFailure;
}

RunReport cmd_run(const RunConfig& config, std::ostream& out) {
  RunReport report = run_experiment(config, true);
  out << report_text(report);
  out << "\noutputs written to " << config.out.string() << "\n";
  return report;
}

void cmd_mask(const std::filesystem::path& in, const MaskSpec& spec, const std::filesystem::path& out_dir,
              std::ostream& out) {
  const MultiViewDataset ds = load_dataset(in);
  if (!ds.complete()) throw ConfigError("mask: input dataset already has missing views");
  const MultiViewDataset masked = make_incomplete(ds, spec);
  save_dataset(masked, out_dir);
  out << "masked " << masked.samples() << " samples, " << masked.view_count() << " views (" << to_string(spec.mode)
      << ", p = " << format_double(spec.rate) << ")\n";
  for (std::size_t v = 0; v < masked.view_count(); ++v)
    out << "  view " << v + 1 << ": " << masked.available(v) << " available\n";
}

void cmd_eval(const std::filesystem::path& assignments, const std::filesystem::path& labels, std::ostream& out) {
  const Labels pred = read_labels(assignments);
  const Labels truth = read_labels(labels);
  if (pred.size() != truth.size())
    throw DataError("eval: " + assignments.string() + " has " + std::to_string(pred.size()) + " rows but " +
                    labels.string() + " has " + std::to_string(truth.size()));
  out << std::fixed << std::setprecision(6);
  out << "ACC " << accuracy(pred, truth) << "\n";
  out << "NMI " << nmi(pred, truth) << "\n";
}

void cmd_synth(const SyntheticSpec& spec, const std::optional<MaskSpec>& mask, const std::filesystem::path& out_dir,
               std::ostream& out) {
  MultiViewDataset ds = make_synthetic(spec);
  if (mask) ds = make_incomplete(ds, *mask);
  save_dataset(ds, out_dir);
  out << "wrote " << ds.samples() << " samples, " << ds.view_count() << " views to " << out_dir.string() << "\n";
}

}  // namespace cdimc::app
