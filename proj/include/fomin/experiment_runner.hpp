#pragma once

#include "fomin/experiment_config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fomin {

/// One pass/fail verdict. `anchor` names the statement being verified.
struct Check {
  std::string name;
  std::string anchor;
  double value = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// A reported quantity without a verdict of its own.
struct Measurement {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<Measurement> measurements;
  std::vector<std::string> exports;  // file names written into output_dir

  bool all_pass() const;
  const Check& check(const std::string& name) const;
  const Measurement& measurement(const std::string& name) const;
};

struct CatalogEntry {
  std::string name;
  std::string anchor;
  std::string summary;
};

std::vector<CatalogEntry> experiment_catalog();

/// Runs the experiment. CSV exports go to config.output_dir when it is set.
/// Throws DivergenceError (message names the experiment) and ConfigError.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// {experiment, model, checks, measurements, exports, config, seed, version}.
/// Contains nothing that varies between identical runs.
Json report_json(const ExperimentConfig& config, const ExperimentResult& result);

/// Writes report.json (and run_meta.json with wall-clock data) into
/// config.output_dir, creating it if needed.
void write_report(const ExperimentConfig& config, const ExperimentResult& result, double wall_seconds);

/// Version string of the build (git describe when available).
std::string artifact_version();

/// Process exit codes of `run`.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitDiverged = 3;

}  // namespace fomin
