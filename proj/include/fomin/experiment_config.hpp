#pragma once

#include "fomin/drift_models.hpp"
#include "fomin/sde_engine.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace fomin {

using Json = nlohmann::ordered_json;

/// A config that does not match the schema. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every tolerance an experiment may consult. Defaults are the documented ones.
struct Tolerances {
  double sigma = 4.0;               // multiplier of the SE in statistical checks
  double tol_disc = 0.02;           // pathwise Gronwall slack
  double hypothesis_slack = 1e-9;   // allowed negative slack on the hypothesis grid
  double score_l2 = 0.07;           // relative L^2 error of the score against an oracle
  double ibp_normalized = 0.05;     // |lhs - rhs| / (||phi||_p |z|)
  double generator_relative = 0.10; // pointwise -1/2 D*D phi against the oracle score
  double stability = 0.25;          // refinement stability (small-time constant, C_p sup)
};

struct ExperimentConfig {
  std::string experiment;
  std::string model_name;
  ParamOverrides overrides;
  SimConfig sim;
  /// Experiment knobs with every default filled in.
  Json knobs;
  Tolerances tolerances;
  std::string output_dir;

  DriftModel model() const;
  /// The resolved config as JSON (re-parses to an equal config).
  Json to_json() const;
};

std::vector<std::string> experiment_names();

/// Default knobs of an experiment; throws ConfigError for unknown names.
Json default_knobs(const std::string& experiment);

/// Validates and resolves a config document. Unknown keys at any level, wrong
/// types and out-of-range values raise ConfigError naming the key.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Typed knob access; the knob must exist (defaults guarantee that).
double knob_double(const ExperimentConfig& config, const std::string& key);
int knob_int(const ExperimentConfig& config, const std::string& key);
bool knob_bool(const ExperimentConfig& config, const std::string& key);
std::string knob_string(const ExperimentConfig& config, const std::string& key);
std::vector<double> knob_doubles(const ExperimentConfig& config, const std::string& key);
std::vector<std::string> knob_strings(const ExperimentConfig& config, const std::string& key);
/// A point or direction; must have the model dimension.
Vector knob_vector(const ExperimentConfig& config, const std::string& key);
/// A list of points or directions, each of the model dimension.
std::vector<Vector> knob_vectors(const ExperimentConfig& config, const std::string& key);

}  // namespace fomin
