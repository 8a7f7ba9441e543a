// Command-line front end: runs experiment configs and lists the catalog.
#include "fomin/experiment_runner.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iomanip>
#include <iostream>
#include <optional>

namespace {

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> n_paths;
};

int run(const RunOptions& opt) {
  fomin::ExperimentConfig config;
  try {
    config = fomin::load_config(opt.config_path);
    // Overrides go through the parser so they are validated like the file.
    fomin::Json doc = config.to_json();
    if (opt.seed) doc["sim"]["seed"] = *opt.seed;
    if (opt.n_paths) doc["sim"]["n_paths"] = *opt.n_paths;
    if (opt.output_dir) doc["output_dir"] = *opt.output_dir;
    config = fomin::parse_config(doc);
  } catch (const fomin::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return fomin::kExitInvalidConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  fomin::ExperimentResult result;
  try {
    result = fomin::run_experiment(config);
  } catch (const fomin::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return fomin::kExitInvalidConfig;
  } catch (const fomin::DivergenceError& e) {
    std::cerr << e.what() << '\n';
    return fomin::kExitDiverged;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fomin::write_report(config, result, seconds);

  for (const auto& c : result.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(44) << c.name << " value=" << c.value
              << " se=" << c.std_error << " bound=" << c.bound << '\n';
  }
  const auto dir = config.output_dir.empty() ? std::string(".") : config.output_dir;
  std::cout << config.experiment << ": " << (result.all_pass() ? "all checks pass" : "some checks FAIL") << " ("
            << std::fixed << std::setprecision(1) << seconds << " s), report in " << dir << "/report.json\n";
  return result.all_pass() ? fomin::kExitPass : fomin::kExitCheckFailed;
}

void list() {
  for (const auto& e : fomin::experiment_catalog()) {
    std::cout << std::left << std::setw(22) << e.name << e.anchor << "\n" << std::setw(22) << "" << e.summary
              << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for Fomin differentiability of invariant measures"};
  app.set_version_flag("--version", fomin::artifact_version());
  app.require_subcommand(1);

  RunOptions opt;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config and write report.json");
  run_cmd->add_option("config", opt.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", opt.seed, "Override sim.seed");
  run_cmd->add_option("--output-dir", opt.output_dir, "Override output_dir");
  run_cmd->add_option("--n-paths", opt.n_paths, "Override sim.n_paths")->check(CLI::PositiveNumber);
  app.add_subcommand("list", "List the experiments and what each verifies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fomin::kExitInvalidConfig;
  }
  if (app.got_subcommand("list")) {
    list();
    return 0;
  }
  return run(opt);
}
