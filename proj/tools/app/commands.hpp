#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>

#include "app/experiment.hpp"

namespace cdimc::app {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

int exit_code_for(const std::exception& e);

// Runs every seed, writes the outputs under config.out and prints the text report.
RunReport cmd_run(const RunConfig& config, std::ostream& out);

// Loads a complete dataset, applies the mask protocol and saves the result.
void cmd_mask(const std::filesystem::path& in, const MaskSpec& spec, const std::filesystem::path& out_dir,
              std::ostream& out);

// Prints ACC and NMI of an `index,cluster` file against a labels file.
void cmd_eval(const std::filesystem::path& assignments, const std::filesystem::path& labels, std::ostream& out);

// Writes a synthetic dataset, optionally already masked.
void cmd_synth(const SyntheticSpec& spec, const std::optional<MaskSpec>& mask, const std::filesystem::path& out_dir,
               std::ostream& out);

}  // namespace cdimc::app
