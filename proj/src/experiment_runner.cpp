#include "fomin/experiment_runner.hpp"

#include "fomin/fomin_calculus.hpp"
#include "fomin/invariant_measure.hpp"
#include "fomin/parallel.hpp"
#include "fomin/semigroup.hpp"
#include "fomin/test_functions.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef FOMINLAB_VERSION
#define FOMINLAB_VERSION "unknown"
#endif

namespace fomin {

namespace {

constexpr double kNoBound = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

std::string fmt(const Vector& x) {
  std::string s;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? ":" : "") + fmt(x[i]);
  return s;
}

bool within(double value, double bound) { return std::isfinite(value) && std::abs(value) <= bound; }

class Recorder {
 public:
  explicit Recorder(ExperimentResult& result) : result_(result) {}

  void check(std::string name, std::string anchor, double value, double se, double bound, bool pass) {
    result_.checks.push_back({std::move(name), std::move(anchor), value, se, bound, pass});
  }
  void measure(std::string name, double value, double se = 0.0) {
    result_.measurements.push_back({std::move(name), value, se});
  }
  void measure(const std::string& name, const MCEstimate& e) { measure(name, e.value, e.std_error); }

 private:
  ExperimentResult& result_;
};

struct Context {
  const ExperimentConfig& config;
  DriftModel model;
  Recorder rec;
  ExperimentResult& result;

  double sigma() const { return config.tolerances.sigma; }
  int dim() const { return model.dim(); }

  void export_file(const std::string& name, const std::function<void(std::ostream&)>& write) {
    if (config.output_dir.empty()) return;
    std::filesystem::create_directories(config.output_dir);
    std::ofstream out(std::filesystem::path(config.output_dir) / name);
    if (!out) throw std::runtime_error("cannot write " + name + " into " + config.output_dir);
    write(out);
    result.exports.push_back(name);
  }
};

EmpiricalMeasure build_measure(Context& ctx) {
  const auto& c = ctx.config;
  const std::string sampler = knob_string(c, "sampler");
  if (sampler == "import") {
    const std::string path = knob_string(c, "import_csv");
    std::ifstream in(path);
    if (!in) throw ConfigError("knobs.import_csv: cannot open '" + path + "'");
    EmpiricalMeasure m = read_measure_csv(in);
    if (m.dim() != ctx.dim()) throw ConfigError("knobs.import_csv: dimension does not match the model");
    return m;
  }
  const Vector x0 = knob_vector(c, "x0");
  if (sampler == "krylov_bogoliubov") return sample_krylov_bogoliubov(ctx.model, x0, knob_double(c, "horizon"), c.sim);
  const int n = knob_int(c, "n_samples");
  if (n < 2) throw ConfigError("knobs.n_samples: must be >= 2");
  return sample_long_run(ctx.model, x0, knob_double(c, "burn_in"), static_cast<std::size_t>(n),
                         knob_double(c, "thin"), c.sim);
}

void maybe_export_measure(Context& ctx, const EmpiricalMeasure& m) {
  if (knob_bool(ctx.config, "export_csv")) {
    ctx.export_file("measure.csv", [&](std::ostream& out) { write_measure_csv(m, out); });
  }
}

Bandwidth bandwidth_knob(const ExperimentConfig& c) {
  const Json& v = c.knobs.at("bandwidth");
  return v.is_number() ? Bandwidth::fixed(v.get<double>()) : Bandwidth::silverman();
}

std::vector<TestFunction> battery_knob(const Context& ctx, const std::string& key) {
  std::vector<TestFunction> out;
  for (const auto& label : knob_strings(ctx.config, key)) out.push_back(battery_function(label, ctx.dim()));
  return out;
}

std::vector<std::pair<std::string, std::function<double(const Vector&)>>> as_observables(
    const std::vector<TestFunction>& battery) {
  std::vector<std::pair<std::string, std::function<double(const Vector&)>>> out;
  for (const auto& f : battery) out.emplace_back(f.label, f.phi);
  return out;
}

void hypothesis_check(Context& ctx) {
  const auto& c = ctx.config;
  const auto& tol = c.tolerances;
  const int n_points = knob_int(c, "grid_points");
  if (n_points < 3) throw ConfigError("knobs.grid_points: must be >= 3");
  const auto grid = radial_grid(ctx.dim(), knob_double(c, "radius"), n_points);
  const auto report = check_hypothesis(ctx.model, grid, tol.hypothesis_slack);
  ctx.rec.check("dissipativity", "dissipativity of the drift", report.dissipativity_slack, 0.0,
                -tol.hypothesis_slack, report.dissipativity_pass);
  ctx.rec.check("growth", "polynomial growth of drift and Jacobian", report.growth_slack, 0.0,
                -tol.hypothesis_slack, report.growth_pass);
  ctx.rec.measure("grid_points", static_cast<double>(report.n_points));
  if (!knob_bool(c, "gronwall")) return;
  const auto paths = simulate_paths(ctx.model, knob_vector(c, "x0"), knob_vector(c, "h"), c.sim);
  if (const auto bad = count_diverged(paths); bad > 0) {
    throw DivergenceError(std::to_string(bad) + " of " + std::to_string(paths.size()) + " paths diverged");
  }
  double worst = 0.0;
  bool pass = true;
  for (const auto& p : paths) {
    const auto r = check_eta_bound(p, tol.tol_disc);
    worst = std::max(worst, r.worst_ratio);
    pass = pass && r.pass;
  }
  ctx.rec.check("gronwall_eta_bound", "pathwise Gronwall bound on the tangent flow", worst, 0.0, 1.0 + tol.tol_disc,
                pass);
}

void moments(Context& ctx) {
  const auto& c = ctx.config;
  const int m_max = knob_int(c, "m_max");
  if (m_max < 1) throw ConfigError("knobs.m_max: must be >= 1");
  const auto measure = build_measure(ctx);
  ctx.rec.measure("n_samples", static_cast<double>(measure.size()));
  for (const auto& m : check_moments(measure, ctx.model.params(), m_max, ctx.sigma())) {
    ctx.rec.check("moment_" + std::to_string(m.m), "stationary moment bound", m.moment.value, m.moment.std_error,
                  m.bound, m.pass);
  }
  const auto times = knob_doubles(c, "transient_times");
  if (!times.empty()) {
    for (const auto& p :
         check_transient_moments(ctx.model, knob_vector(c, "transient_x0"), times, m_max, c.sim, ctx.sigma())) {
      ctx.rec.check("transient_moment_" + std::to_string(p.m) + "_t=" + fmt(p.t), "transient moment bound",
                    p.moment.value, p.moment.std_error, p.bound, p.pass);
    }
  }
  maybe_export_measure(ctx, measure);
}

void tail(Context& ctx) {
  const auto& c = ctx.config;
  const auto times = knob_doubles(c, "times");
  const auto radii = knob_doubles(c, "radii");
  for (const Vector& x0 : knob_vectors(c, "starts")) {
    for (const auto& t : check_tail_bounds(ctx.model, x0, times, radii, c.sim, ctx.sigma())) {
      ctx.rec.check("tail_x0=" + fmt(x0) + "_t=" + fmt(t.t) + "_r=" + fmt(t.r), "Chebyshev tail bound",
                    t.probability.value, t.probability.std_error, t.bound, t.pass);
    }
  }
}

void semigroup_identities(Context& ctx) {
  const auto& c = ctx.config;
  const Vector x0 = knob_vector(c, "x0");
  const TestFunction phi = battery_function(knob_string(c, "observable"), ctx.dim());
  const int n_quad = knob_int(c, "n_quad");
  const int n_inner = knob_int(c, "n_inner");
  const double t = c.sim.t_final;
  if (knob_bool(c, "voc")) {
    const auto r = check_voc_identity(ctx.model, phi.phi, x0, t, c.sim, {n_quad, n_inner, ctx.sigma()});
    ctx.rec.check("variation_of_constants", "variation-of-constants identity", r.residual, r.std_error, r.bound,
                  r.pass);
    ctx.rec.measure("voc_lhs", r.lhs);
    ctx.rec.measure("voc_rhs", r.rhs);
    ctx.rec.measure("voc_quadrature_tolerance", r.tolerance);
  }
  if (knob_bool(c, "commutation")) {
    CommutationOptions opt;
    opt.n_quad = n_quad;
    opt.n_inner = n_inner;
    opt.sigma = ctx.sigma();
    const auto r = check_commutation_identity(ctx.model, phi, x0, knob_vector(c, "h"), t, c.sim, opt);
    ctx.rec.check("commutation", "commutation of the gradient with the semigroup", r.residual, r.std_error,
                  r.bound, r.pass);
    ctx.rec.measure("commutation_lhs", r.lhs);
    ctx.rec.measure("commutation_rhs", r.rhs);
  }
}

void bel_check(Context& ctx) {
  const auto& c = ctx.config;
  const Vector x0 = knob_vector(c, "x0");
  const Vector h = knob_vector(c, "h");
  const double step = knob_double(c, "fd_step") > 0.0 ? knob_double(c, "fd_step") : default_fd_step(x0);
  for (const auto& phi : battery_knob(ctx, "battery")) {
    for (double t : knob_doubles(c, "times")) {
      const auto bel = estimate_DSt_bel(ctx.model, phi.phi, x0, h, t, c.sim);
      const auto fd = estimate_DSt_fd(ctx.model, phi.phi, x0, h, t, c.sim, step);
      const double se = combined_std_error(bel.total, fd);
      const double diff = bel.total.value - fd.value;
      const std::string tag = phi.label + "_t=" + fmt(t);
      ctx.rec.check("bel_vs_fd_" + tag, "Bismut-Elworthy-Li formula for the Feynman-Kac gradient", diff, se,
                    ctx.sigma() * se, within(diff, ctx.sigma() * se));
      ctx.rec.measure("bel_" + tag, bel.total);
      ctx.rec.measure("bel_i1_" + tag, bel.i1);
      ctx.rec.measure("bel_i2_" + tag, bel.i2);
      ctx.rec.measure("fd_" + tag, fd);
    }
  }
}

void small_t_scan(Context& ctx) {
  const auto& c = ctx.config;
  const Vector x0 = knob_vector(c, "x0");
  const Vector h = knob_vector(c, "h");
  const TestFunction phi = battery_function(knob_string(c, "observable"), ctx.dim());
  const double t_min = knob_double(c, "t_min"), t_max = knob_double(c, "t_max"), p = knob_double(c, "p");
  const int coarse_n = knob_int(c, "coarse_points"), fine_n = knob_int(c, "fine_points");
  if (coarse_n < 2 || fine_n <= coarse_n) throw ConfigError("knobs.fine_points: must exceed coarse_points >= 2");
  const auto coarse = scan_small_t_singularity(ctx.model, phi.phi, x0, h, log_time_grid(t_min, t_max, coarse_n),
                                               c.sim, p);
  const auto fine =
      scan_small_t_singularity(ctx.model, phi.phi, x0, h, log_time_grid(t_min, t_max, fine_n), c.sim, p);
  for (const auto& pt : fine.points) {
    ctx.rec.measure("derivative_t=" + fmt(pt.t), pt.derivative);
    ctx.rec.measure("envelope_ratio_t=" + fmt(pt.t), pt.ratio);
  }
  ctx.rec.measure("log_log_slope", fine.slope);
  ctx.rec.measure("slope_inconclusive", fine.inconclusive ? 1.0 : 0.0);
  ctx.rec.measure("envelope_constant_coarse", coarse.max_ratio);
  ctx.rec.check("envelope_constant", "small-time gradient envelope", fine.max_ratio, 0.0, kNoBound,
                std::isfinite(fine.max_ratio) && fine.max_ratio > 0.0);
  const double stability = std::abs(fine.max_ratio - coarse.max_ratio) / coarse.max_ratio;
  ctx.rec.check("envelope_refinement_stability", "small-time gradient envelope", stability, 0.0,
                c.tolerances.stability, within(stability, c.tolerances.stability));
}

void invariant_sample(Context& ctx) {
  const auto& c = ctx.config;
  const auto measure = build_measure(ctx);
  ctx.rec.measure("n_samples", static_cast<double>(measure.size()));
  ctx.rec.measure("effective_size", measure.effective_size());
  const auto battery = as_observables(battery_knob(ctx, "battery"));
  for (const auto& hc : stationarity_diagnostic(measure, battery, ctx.sigma())) {
    ctx.rec.check("stationarity_" + hc.label, "stationarity of the sampled measure", hc.z_score, 0.0, ctx.sigma(),
                  hc.agree);
  }
  for (const auto& ic : check_invariance(ctx.model, measure, battery, knob_double(c, "invariance_delta"), c.sim,
                                         ctx.sigma())) {
    ctx.rec.check("invariance_" + ic.label, "invariance of the sampled measure", ic.difference.value,
                  ic.difference.std_error, ctx.sigma() * ic.difference.std_error, ic.pass);
  }
  maybe_export_measure(ctx, measure);
}

void fomin_suite(Context& ctx) {
  const auto& c = ctx.config;
  const auto& tol = c.tolerances;
  const auto measure = build_measure(ctx);
  const auto field = make_score_field(measure, bandwidth_knob(c));
  const auto directions = knob_vectors(c, "directions");
  const double p = knob_double(c, "p");
  ctx.rec.measure("n_samples", static_cast<double>(measure.size()));
  for (int h = 0; h < ctx.dim(); ++h) ctx.rec.measure("bandwidth_" + std::to_string(h + 1), field.density().bandwidth()[h]);

  for (const auto& phi : battery_knob(ctx, "battery")) {
    for (std::size_t k = 0; k < directions.size(); ++k) {
      const auto r = ibp_residual(measure, field, phi, directions[k], p);
      const std::string tag = phi.label + "_z" + std::to_string(k + 1);
      ctx.rec.check("ibp_" + tag, "integration by parts with the Fomin score", r.normalized_residual,
                    r.difference.std_error / (r.phi_norm.value * directions[k].norm()), tol.ibp_normalized,
                    within(r.normalized_residual, tol.ibp_normalized));
      ctx.rec.measure("ibp_lhs_" + tag, r.lhs);
      ctx.rec.measure("ibp_rhs_" + tag, r.rhs);
      ctx.rec.measure("phi_norm_" + tag, r.phi_norm);
    }
  }
  const auto centering = check_score_centering(measure, field, directions, ctx.sigma());
  for (std::size_t k = 0; k < centering.size(); ++k) {
    const auto& cc = centering[k];
    ctx.rec.check("score_centering_z" + std::to_string(k + 1), "the score has mean zero", cc.mean.value,
                  cc.mean.std_error, ctx.sigma() * cc.mean.std_error, cc.pass);
  }
  const auto& oracle = ctx.model.oracle();
  const bool has_oracle = oracle && oracle->grad_log_density;
  if (has_oracle) {
    const double err = score_oracle_l2_error(measure, field, ctx.model);
    ctx.rec.check("score_l2_error", "score field against the stationary score", err, 0.0, tol.score_l2,
                  within(err, tol.score_l2));
  }

  const TestFunction phi = battery_function(knob_string(c, "adjoint_phi"), ctx.dim());
  VectorField F;
  F.components = battery_knob(ctx, "adjoint_field");
  if (F.dim() != ctx.dim()) throw ConfigError("knobs.adjoint_field: needs one label per coordinate");
  const auto adj = check_adjointness(measure, field, phi, F, ctx.sigma());
  ctx.rec.check("adjointness", "D* is the adjoint of D", adj.difference.value, adj.difference.std_error,
                ctx.sigma() * adj.difference.std_error, adj.pass);
  const TestFunction psi = battery_function(knob_string(c, "dirichlet_psi"), ctx.dim());
  const auto dir = check_dirichlet_form(measure, field, phi, psi, ctx.sigma());
  ctx.rec.check("dirichlet_form", "Dirichlet form of the generalized Ornstein-Uhlenbeck operator",
                dir.difference.value, dir.difference.std_error, ctx.sigma() * dir.difference.std_error, dir.pass);

  const auto points = knob_vectors(c, "generator_points");
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Vector& x = points[k];
    const double est = generalized_ou_apply(field, phi, x);
    const std::string tag = "x" + std::to_string(k + 1);
    ctx.rec.measure("generator_" + tag, est);
    if (!has_oracle) continue;
    const Vector v = kScoreSign * oracle->grad_log_density(x);
    const double exact = 0.5 * phi.hessian(x).trace() - 0.5 * v.dot(phi.grad(x));
    ctx.rec.measure("generator_oracle_" + tag, exact);
    const double rel = std::abs(est - exact) / std::abs(exact);
    ctx.rec.check("generator_" + tag + "_relative_error", "pointwise generalized Ornstein-Uhlenbeck operator", rel,
                  0.0, tol.generator_relative, within(rel, tol.generator_relative));
  }

  for (std::size_t k = 0; k < directions.size(); ++k) {
    const auto ladder = score_lp_ladder(measure, field, directions[k]);
    for (const auto& s : ladder.steps) {
      ctx.rec.measure("score_lp_z" + std::to_string(k + 1) + "_p=" + fmt(s.p), s.norm);
    }
    ctx.rec.check("score_integrability_z" + std::to_string(k + 1), "the score lies in every L^p",
                  ladder.steps.back().norm.value, ladder.steps.back().norm.std_error, kNoBound,
                  ladder.finite && ladder.increasing);
  }
  maybe_export_measure(ctx, measure);
  if (knob_bool(c, "export_scores")) {
    ctx.export_file("scores.csv", [&](std::ostream& out) { write_score_csv(measure, field, out); });
  }
}

void cp_scan(Context& ctx) {
  const auto& c = ctx.config;
  const auto measure = build_measure(ctx);
  const auto field = make_score_field(measure, bandwidth_knob(c));
  const auto directions = knob_vectors(c, "directions");
  const auto report = estimate_Cp(measure, field, battery_knob(ctx, "battery"), directions, knob_double(c, "p"));
  for (const auto& e : report.entries) {
    std::size_t k = 0;
    while (k < directions.size() && directions[k] != e.direction) ++k;
    ctx.rec.measure("ratio_" + e.label + "_z" + std::to_string(k + 1), e.ratio, e.ratio_std_error);
  }
  const auto& best = report.entries[report.argmax];
  ctx.rec.measure("score_sup_ratio", report.score_sup_ratio);
  ctx.rec.measure("half_battery_sup_ratio", report.half_sup_ratio);
  ctx.rec.check("cp_sup_ratio", "main inequality constant", report.sup_ratio, best.ratio_std_error, kNoBound,
                std::isfinite(report.sup_ratio));
  const double stability = report.stability();
  ctx.rec.check("cp_half_battery_stability", "main inequality constant", stability, 0.0, c.tolerances.stability,
                within(stability, c.tolerances.stability));
  maybe_export_measure(ctx, measure);
}

Json check_json(const Check& c) {
  Json j;
  j["name"] = c.name;
  j["anchor"] = c.anchor;
  j["value"] = c.value;
  j["std_error"] = c.std_error;
  j["bound"] = c.bound;
  j["pass"] = c.pass;
  return j;
}

}  // namespace

bool ExperimentResult::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return !checks.empty();
}

const Check& ExperimentResult::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no check named '" + name + "'");
}

const Measurement& ExperimentResult::measurement(const std::string& name) const {
  for (const auto& m : measurements) {
    if (m.name == name) return m;
  }
  throw std::out_of_range("no measurement named '" + name + "'");
}

std::vector<CatalogEntry> experiment_catalog() {
  return {
      {"hypothesis_check", "dissipativity, polynomial growth, pathwise Gronwall bound",
       "slack of the drift conditions on a radial grid; e^{-beta}|eta| along simulated paths"},
      {"moments", "stationary and transient moment bounds",
       "moments of a sampled invariant measure against the recursion constants A_m"},
      {"tail", "Chebyshev tail bound", "P(|X(t,x0)| >= r) against (|x0|^2 + A_1) / r^2"},
      {"semigroup_identities", "variation-of-constants identity, commutation of D with P_t",
       "nested Monte Carlo residuals of both identities"},
      {"bel_check", "Bismut-Elworthy-Li formula for the Feynman-Kac gradient",
       "BEL estimate of DS_t phi against common-random-number finite differences"},
      {"small_t_scan", "small-time gradient envelope",
       "|DS_t phi| against (1 + t^{-1/2})(1 + |x|^{2N-1})(P_t|phi|^p)^{1/p} on two t-grids"},
      {"invariant_sample", "invariance of the sampled measure",
       "long-run or occupation sample, stationarity halves and one-step invariance"},
      {"fomin_suite", "integration by parts, adjoint D*, generalized Ornstein-Uhlenbeck operator",
       "KDE score field and every identity it must satisfy"},
      {"cp_scan", "main inequality constant", "sup over a battery of |E<D phi, h>| / (||phi||_p |h|)"},
  };
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  result.experiment = config.experiment;
  Context ctx{config, config.model(), Recorder(result), result};
  try {
    const std::string& e = config.experiment;
    if (e == "hypothesis_check") {
      hypothesis_check(ctx);
    } else if (e == "moments") {
      moments(ctx);
    } else if (e == "tail") {
      tail(ctx);
    } else if (e == "semigroup_identities") {
      semigroup_identities(ctx);
    } else if (e == "bel_check") {
      bel_check(ctx);
    } else if (e == "small_t_scan") {
      small_t_scan(ctx);
    } else if (e == "invariant_sample") {
      invariant_sample(ctx);
    } else if (e == "fomin_suite") {
      fomin_suite(ctx);
    } else if (e == "cp_scan") {
      cp_scan(ctx);
    } else {
      throw ConfigError("experiment: unknown experiment '" + e + "'");
    }
  } catch (const DivergenceError& err) {
    throw DivergenceError("experiment '" + config.experiment + "' diverged: " + err.what());
  } catch (const ModelEvaluationError& err) {
    throw DivergenceError("experiment '" + config.experiment + "' diverged: " + err.what());
  }
  return result;
}

std::string artifact_version() { return FOMINLAB_VERSION; }

Json report_json(const ExperimentConfig& config, const ExperimentResult& result) {
  Json doc;
  doc["experiment"] = result.experiment;
  doc["model"] = config.model_name;
  doc["pass"] = result.all_pass();
  doc["checks"] = Json::array();
  for (const auto& c : result.checks) doc["checks"].push_back(check_json(c));
  doc["measurements"] = Json::array();
  for (const auto& m : result.measurements) {
    doc["measurements"].push_back({{"name", m.name}, {"value", m.value}, {"std_error", m.std_error}});
  }
  doc["exports"] = result.exports;
  doc["config"] = config.to_json();
  doc["seed"] = config.sim.seed;
  doc["version"] = artifact_version();
  return doc;
}

void write_report(const ExperimentConfig& config, const ExperimentResult& result, double wall_seconds) {
  const std::filesystem::path dir = config.output_dir.empty() ? "." : config.output_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    out << report_json(config, result).dump(2) << '\n';
  }
  std::ofstream meta(dir / "run_meta.json");
  Json m;
  m["wall_clock_seconds"] = wall_seconds;
  m["workers"] = worker_count();
  m["version"] = artifact_version();
  meta << m.dump(2) << '\n';
}

}  // namespace fomin
