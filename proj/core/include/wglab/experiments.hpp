#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wglab/config.hpp"
#include "wglab/output.hpp"
#include "wglab/report.hpp"

namespace wglab {

enum ExitCode : int { kExitPass = 0, kExitValidation = 2, kExitInstability = 3, kExitTolerance = 4 };

struct ExperimentInfo {
  std::string id;
  std::string description;
};

/// The fixed catalog, in display order.
const std::vector<ExperimentInfo>& list_experiments();

/// Tables and reports produced by one experiment, before anything is written.
struct ExperimentOutput {
  std::vector<std::pair<std::string, CsvTable>> tables;  // file stem -> table
  std::vector<EstimateReport> reports;
  bool all_pass() const;
};

/// Runs the experiment without touching the file system.
ExperimentOutput execute(const ExperimentConfig& cfg);

struct RunResult {
  int exit_code = kExitPass;
  std::string message;
  std::vector<std::filesystem::path> files;
  std::vector<EstimateReport> reports;
};

/// Validates, executes and writes <stem>.csv, summary.json, config.txt and
/// manifest.json into cfg.output_dir. Validation errors write nothing;
/// instabilities still write a summary carrying the failure time.
RunResult run(const ExperimentConfig& cfg);

}  // namespace wglab
