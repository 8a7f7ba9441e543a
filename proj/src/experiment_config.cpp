#include "fomin/experiment_config.hpp"

#include "fomin/test_functions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace fomin {

namespace {

enum class Kind { number, integer, boolean, string, numbers, strings, point, points, bandwidth, battery };

struct KnobSpec {
  std::string name;
  Json value;
  Kind kind;
};

using Schema = std::vector<KnobSpec>;

Schema measure_knobs() {
  return {
      {"sampler", "long_run", Kind::string},
      {"x0", 0.0, Kind::point},
      {"burn_in", 5.0, Kind::number},
      {"n_samples", 100000, Kind::integer},
      {"thin", 2.0, Kind::number},
      {"horizon", 10.0, Kind::number},
      {"import_csv", "", Kind::string},
      {"export_csv", false, Kind::boolean},
  };
}

Schema schema_for(const std::string& experiment) {
  if (experiment == "hypothesis_check") {
    return {{"radius", 10.0, Kind::number},
            {"grid_points", 10000, Kind::integer},
            {"gronwall", true, Kind::boolean},
            {"x0", 0.5, Kind::point},
            {"h", 1.0, Kind::point}};
  }
  if (experiment == "moments") {
    Schema s = measure_knobs();
    s.insert(s.begin(), {"m_max", 2, Kind::integer});
    s.push_back({"transient_times", Json::array(), Kind::numbers});
    s.push_back({"transient_x0", 1.0, Kind::point});
    return s;
  }
  if (experiment == "tail") {
    return {{"starts", Json::array({0.0, 1.0, 2.0}), Kind::points},
            {"times", Json::array({0.5, 1.0, 8.0}), Kind::numbers},
            {"radii", Json::array({1.0, 1.5, 2.0, 3.0}), Kind::numbers}};
  }
  if (experiment == "semigroup_identities") {
    return {{"x0", 0.5, Kind::point},
            {"h", 1.0, Kind::point},
            {"observable", "sin_1_e1", Kind::string},
            {"n_quad", 16, Kind::integer},
            {"n_inner", 16, Kind::integer},
            {"voc", true, Kind::boolean},
            {"commutation", true, Kind::boolean}};
  }
  if (experiment == "bel_check") {
    return {{"x0", 0.5, Kind::point},
            {"h", 1.0, Kind::point},
            {"battery", Json::array({"sin_1_e1", "tanh_e1"}), Kind::battery},
            {"times", Json::array({0.25, 0.5, 1.0}), Kind::numbers},
            {"fd_step", 0.0, Kind::number}};
  }
  if (experiment == "small_t_scan") {
    return {{"x0", 0.5, Kind::point},
            {"h", 1.0, Kind::point},
            {"observable", "sin_1_e1", Kind::string},
            {"t_min", 0.05, Kind::number},
            {"t_max", 1.0, Kind::number},
            {"coarse_points", 5, Kind::integer},
            {"fine_points", 9, Kind::integer},
            {"p", 2.0, Kind::number}};
  }
  if (experiment == "invariant_sample") {
    Schema s = measure_knobs();
    for (auto& k : s) {
      if (k.name == "n_samples") k.value = 20000;
      if (k.name == "thin") k.value = 0.5;
      if (k.name == "export_csv") k.value = true;
    }
    s.push_back({"battery", Json::array({"cos_1_e1", "bump_0"}), Kind::battery});
    s.push_back({"invariance_delta", 0.5, Kind::number});
    return s;
  }
  if (experiment == "fomin_suite") {
    Schema s = measure_knobs();
    s.push_back({"bandwidth", "silverman", Kind::bandwidth});
    s.push_back({"battery", Json::array({"sin_1_e1"}), Kind::battery});
    s.push_back({"directions", "basis", Kind::points});
    s.push_back({"p", 2.0, Kind::number});
    s.push_back({"adjoint_phi", "sin_1_e1", Kind::string});
    s.push_back({"adjoint_field", "tanh_e<h>", Kind::strings});
    s.push_back({"dirichlet_psi", "cos_1_e1", Kind::string});
    s.push_back({"generator_points", Json::array({1.0}), Kind::points});
    s.push_back({"export_scores", false, Kind::boolean});
    return s;
  }
  if (experiment == "cp_scan") {
    Schema s = measure_knobs();
    s.push_back({"bandwidth", "silverman", Kind::bandwidth});
    s.push_back({"battery", "canonical", Kind::battery});
    s.push_back({"directions", "basis", Kind::points});
    s.push_back({"p", 2.0, Kind::number});
    return s;
  }
  throw ConfigError("experiment: unknown experiment '" + experiment + "'");
}

bool is_number_array(const Json& v) {
  return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); });
}

bool is_string_array(const Json& v) {
  return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_string(); });
}

bool is_point(const Json& v) { return v.is_number() || (is_number_array(v) && !v.empty()); }

void check_kind(const std::string& key, const Json& v, Kind kind) {
  bool ok = false;
  switch (kind) {
    case Kind::number: ok = v.is_number(); break;
    case Kind::integer: ok = v.is_number_integer(); break;
    case Kind::boolean: ok = v.is_boolean(); break;
    case Kind::string: ok = v.is_string(); break;
    case Kind::numbers: ok = is_number_array(v); break;
    case Kind::strings: ok = is_string_array(v) || v.is_string(); break;
    case Kind::point: ok = is_point(v); break;
    case Kind::points:
      ok = v == "basis" ||
           (v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const Json& e) { return is_point(e); }));
      break;
    case Kind::bandwidth: ok = v == "silverman" || (v.is_number() && v.get<double>() > 0.0); break;
    case Kind::battery: ok = v == "canonical" || (is_string_array(v) && !v.empty()); break;
  }
  if (!ok) throw ConfigError("knobs." + key + ": invalid value " + v.dump());
}

void reject_unknown(const Json& obj, const std::string& where, const std::vector<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown key");
    }
  }
}

template <typename T>
T get_as(const Json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ConfigError("");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError(where + "." + key + ": invalid value " + v.dump());
  }
}

const Json& knob(const ExperimentConfig& config, const std::string& key) {
  if (!config.knobs.contains(key)) throw ConfigError("knobs." + key + ": not defined for " + config.experiment);
  return config.knobs.at(key);
}

Vector point_from(const Json& v, int d, const std::string& key) {
  Vector x = Vector::Zero(d);
  if (v.is_number()) {
    x[0] = v.get<double>();
    return x;
  }
  if (static_cast<int>(v.size()) != d) {
    throw ConfigError("knobs." + key + ": expected " + std::to_string(d) + " coordinates");
  }
  for (int i = 0; i < d; ++i) x[i] = v[static_cast<std::size_t>(i)].get<double>();
  return x;
}

}  // namespace

DriftModel ExperimentConfig::model() const {
  try {
    return builtin_model(model_name, overrides);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

Json ExperimentConfig::to_json() const {
  Json params = Json::object();
  if (overrides.omega) params["omega"] = *overrides.omega;
  if (overrides.a) params["a"] = *overrides.a;
  if (overrides.K) params["K"] = *overrides.K;
  if (overrides.N) params["N"] = *overrides.N;
  if (overrides.d) params["d"] = *overrides.d;
  Json doc;
  doc["experiment"] = experiment;
  doc["model"] = {{"name", model_name}, {"params", params}};
  doc["sim"] = {{"dt", sim.dt},           {"t_final", sim.t_final}, {"scheme", to_string(sim.scheme)},
                {"taming_n", sim.taming_n}, {"seed", sim.seed},       {"n_paths", sim.n_paths}};
  doc["knobs"] = knobs;
  doc["tolerances"] = {{"sigma", tolerances.sigma},
                       {"tol_disc", tolerances.tol_disc},
                       {"hypothesis_slack", tolerances.hypothesis_slack},
                       {"score_l2", tolerances.score_l2},
                       {"ibp_normalized", tolerances.ibp_normalized},
                       {"generator_relative", tolerances.generator_relative},
                       {"stability", tolerances.stability}};
  doc["output_dir"] = output_dir;
  return doc;
}

std::vector<std::string> experiment_names() {
  return {"hypothesis_check", "moments",          "tail",        "semigroup_identities", "bel_check",
          "small_t_scan",     "invariant_sample", "fomin_suite", "cp_scan"};
}

Json default_knobs(const std::string& experiment) {
  Json out = Json::object();
  for (const auto& k : schema_for(experiment)) out[k.name] = k.value;
  return out;
}

ExperimentConfig parse_config(const Json& doc) {
  reject_unknown(doc, "", {"experiment", "model", "sim", "knobs", "tolerances", "output_dir"});
  ExperimentConfig c;
  if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
    throw ConfigError("experiment: required string");
  }
  c.experiment = doc["experiment"].get<std::string>();
  const Schema schema = schema_for(c.experiment);

  const Json model = doc.value("model", Json::object());
  reject_unknown(model, "model", {"name", "params"});
  c.model_name = get_as<std::string>(model, "name", "model", "ou");
  const Json params = model.value("params", Json::object());
  reject_unknown(params, "model.params", {"omega", "a", "K", "N", "d"});
  if (params.contains("omega")) c.overrides.omega = get_as<double>(params, "omega", "model.params", 0.0);
  if (params.contains("a")) c.overrides.a = get_as<double>(params, "a", "model.params", 0.0);
  if (params.contains("K")) c.overrides.K = get_as<double>(params, "K", "model.params", 0.0);
  if (params.contains("N")) c.overrides.N = get_as<int>(params, "N", "model.params", 0);
  if (params.contains("d")) c.overrides.d = get_as<int>(params, "d", "model.params", 0);
  try {
    c.model().params().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model.params: ") + e.what());
  }

  const Json sim = doc.value("sim", Json::object());
  reject_unknown(sim, "sim", {"dt", "t_final", "scheme", "taming_n", "seed", "n_paths"});
  c.sim.dt = get_as<double>(sim, "dt", "sim", 1e-3);
  c.sim.t_final = get_as<double>(sim, "t_final", "sim", 1.0);
  c.sim.taming_n = get_as<int>(sim, "taming_n", "sim", 0);
  c.sim.seed = get_as<std::uint64_t>(sim, "seed", "sim", 0);
  c.sim.n_paths = get_as<int>(sim, "n_paths", "sim", 1000);
  try {
    c.sim.scheme = scheme_from_string(get_as<std::string>(sim, "scheme", "sim", "tamed_euler"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sim.scheme: ") + e.what());
  }
  try {
    c.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sim: ") + e.what());
  }

  const Json knobs = doc.value("knobs", Json::object());
  std::vector<std::string> names;
  for (const auto& k : schema) names.push_back(k.name);
  reject_unknown(knobs, "knobs", names);
  c.knobs = Json::object();
  for (const auto& k : schema) {
    const Json& v = knobs.contains(k.name) ? knobs.at(k.name) : k.value;
    check_kind(k.name, v, k.kind);
    c.knobs[k.name] = v;
  }
  const int d = c.model().dim();
  for (const auto& k : schema) {
    if (k.kind == Kind::point) (void)knob_vector(c, k.name);
    if (k.kind == Kind::points) (void)knob_vectors(c, k.name);
    const bool label_knob = k.name == "observable" || k.name == "adjoint_phi" || k.name == "dirichlet_psi";
    if (k.kind == Kind::battery || k.kind == Kind::strings || label_knob) {
      for (const auto& label : knob_strings(c, k.name)) {
        try {
          (void)battery_function(label, d);
        } catch (const std::invalid_argument& e) {
          throw ConfigError("knobs." + k.name + ": " + e.what());
        }
      }
    }
  }
  if (c.knobs.contains("sampler")) {
    const auto s = c.knobs["sampler"].get<std::string>();
    if (s != "long_run" && s != "krylov_bogoliubov" && s != "import") {
      throw ConfigError("knobs.sampler: expected long_run, krylov_bogoliubov or import");
    }
    if (s == "import" && c.knobs["import_csv"].get<std::string>().empty()) {
      throw ConfigError("knobs.import_csv: required when sampler is import");
    }
  }

  const Json tol = doc.value("tolerances", Json::object());
  reject_unknown(tol, "tolerances",
                 {"sigma", "tol_disc", "hypothesis_slack", "score_l2", "ibp_normalized", "generator_relative",
                  "stability"});
  Tolerances& t = c.tolerances;
  t.sigma = get_as<double>(tol, "sigma", "tolerances", t.sigma);
  t.tol_disc = get_as<double>(tol, "tol_disc", "tolerances", t.tol_disc);
  t.hypothesis_slack = get_as<double>(tol, "hypothesis_slack", "tolerances", t.hypothesis_slack);
  t.score_l2 = get_as<double>(tol, "score_l2", "tolerances", t.score_l2);
  t.ibp_normalized = get_as<double>(tol, "ibp_normalized", "tolerances", t.ibp_normalized);
  t.generator_relative = get_as<double>(tol, "generator_relative", "tolerances", t.generator_relative);
  t.stability = get_as<double>(tol, "stability", "tolerances", t.stability);
  for (double v : {t.sigma, t.tol_disc, t.score_l2, t.ibp_normalized, t.generator_relative, t.stability}) {
    if (!(v > 0.0)) throw ConfigError("tolerances: every tolerance must be positive");
  }
  if (t.hypothesis_slack < 0.0) throw ConfigError("tolerances.hypothesis_slack: must be >= 0");

  c.output_dir = get_as<std::string>(doc, "output_dir", "", "");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
  }
  return parse_config(doc);
}

double knob_double(const ExperimentConfig& config, const std::string& key) {
  return knob(config, key).get<double>();
}

int knob_int(const ExperimentConfig& config, const std::string& key) { return knob(config, key).get<int>(); }

bool knob_bool(const ExperimentConfig& config, const std::string& key) { return knob(config, key).get<bool>(); }

std::string knob_string(const ExperimentConfig& config, const std::string& key) {
  return knob(config, key).get<std::string>();
}

std::vector<double> knob_doubles(const ExperimentConfig& config, const std::string& key) {
  return knob(config, key).get<std::vector<double>>();
}

std::vector<std::string> knob_strings(const ExperimentConfig& config, const std::string& key) {
  const Json& v = knob(config, key);
  const int d = config.model().dim();
  if (v == "canonical") return canonical_battery_labels(d);
  if (v.is_string()) {
    // "<h>" expands to one entry per coordinate.
    std::string pattern = v.get<std::string>();
    const auto at = pattern.find("<h>");
    if (at == std::string::npos) return {pattern};
    std::vector<std::string> out;
    for (int h = 1; h <= d; ++h) out.push_back(std::string(pattern).replace(at, 3, std::to_string(h)));
    return out;
  }
  return v.get<std::vector<std::string>>();
}

Vector knob_vector(const ExperimentConfig& config, const std::string& key) {
  return point_from(knob(config, key), config.model().dim(), key);
}

std::vector<Vector> knob_vectors(const ExperimentConfig& config, const std::string& key) {
  const Json& v = knob(config, key);
  const int d = config.model().dim();
  std::vector<Vector> out;
  if (v == "basis") {
    for (int h = 0; h < d; ++h) out.push_back(Vector::Unit(d, h));
    return out;
  }
  for (const auto& e : v) out.push_back(point_from(e, d, key));
  return out;
}

}  // namespace fomin
