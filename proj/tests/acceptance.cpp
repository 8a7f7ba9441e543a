// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Usage: fominlab_acceptance [work_dir]
#include "fomin/experiment_runner.hpp"
#include "fomin/semigroup.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using fomin::Json;

std::filesystem::path g_work = "acceptance_out";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}

fomin::ExperimentResult run(Json doc, const std::string& tag) {
  doc["output_dir"] = (g_work / tag).string();
  return fomin::run_experiment(fomin::parse_config(doc));
}

bool all_named(const fomin::ExperimentResult& r, const std::string& prefix, std::string& worst) {
  bool ok = true;
  for (const auto& c : r.checks) {
    if (c.name.rfind(prefix, 0) != 0) continue;
    if (!c.pass) {
      ok = false;
      worst += " " + c.name + "=" + num(c.value) + "(bound " + num(c.bound) + ")";
    }
  }
  return ok;
}

// Stationary OU law N(0, 1/2): E X^2 = 1/2, E X^4 = 3/4; A_1 = (2a + d) / omega = 1,
// A_2 = A_1 (2a + 2 + d) / (2 omega) = 3/2.
Outcome moment_bound() {
  const auto r = run({{"experiment", "moments"},
                      {"model", {{"name", "ou"}}},
                      {"sim", {{"dt", 2e-3}, {"seed", 101}, {"n_paths", 100}}},
                      {"knobs", {{"m_max", 2}, {"n_samples", 100000}, {"thin", 2.0}, {"burn_in", 5.0}}}},
                     "moments_ou");
  const auto& m1 = r.check("moment_1");
  const auto& m2 = r.check("moment_2");
  const bool pass = std::abs(m1.value - 0.5) <= 0.01 && std::abs(m2.value - 0.75) <= 0.02 && m1.bound == 1.0 &&
                    m2.bound == 1.5 && m1.pass && m2.pass;
  return {pass, "E|X|^2=" + num(m1.value) + " (oracle 0.5 +-0.01, bound " + num(m1.bound) + "), E|X|^4=" +
                    num(m2.value) + " (oracle 0.75 +-0.02, bound " + num(m2.bound) + ")"};
}

Outcome tail_bound() {
  const auto grid = run({{"experiment", "tail"},
                         {"model", {{"name", "ou"}}},
                         {"sim", {{"dt", 5e-3}, {"seed", 102}, {"n_paths", 10000}}},
                         {"knobs", {{"starts", {0.0, 1.0, 2.0}}, {"times", {0.5, 1.0, 8.0}}, {"radii", {1.0, 1.5, 2.0, 3.0}}}}},
                        "tail_grid");
  const auto stat = run({{"experiment", "tail"},
                         {"model", {{"name", "ou"}}},
                         {"sim", {{"dt", 5e-3}, {"seed", 103}, {"n_paths", 100000}}},
                         {"knobs", {{"starts", {0.0}}, {"times", {8.0}}, {"radii", {1.0}}}}},
                        "tail_stationary");
  std::string failures;
  const bool bounds = all_named(grid, "tail_", failures) && all_named(stat, "tail_", failures);
  const auto& p = stat.check("tail_x0=0_t=8_r=1");
  const double exact = std::erfc(1.0);  // P(|N(0, 1/2)| >= 1)
  const bool pass = bounds && std::abs(p.value - exact) <= 0.005;
  return {pass, "P(|X|>=1)=" + num(p.value) + " (oracle " + num(exact) + " +-0.005), bound respected at " +
                    std::to_string(grid.checks.size() + 1) + " (x0,t,r)" + failures};
}

Outcome gronwall_bound() {
  std::string detail, failures;
  bool pass = true;
  for (const std::string model : {"ou", "double_well", "rotated"}) {
    const Json x0 = model == "rotated" ? Json::array({0.5, -0.5}) : Json(1.5);
    const Json h = model == "rotated" ? Json::array({0.6, 0.8}) : Json(1.0);
    const auto r = run({{"experiment", "hypothesis_check"},
                        {"model", {{"name", model}}},
                        {"sim", {{"dt", 1e-3}, {"t_final", 1.0}, {"seed", 104}, {"n_paths", 1000}}},
                        {"knobs", {{"x0", x0}, {"h", h}}}},
                       "gronwall_" + model);
    const auto& c = r.check("gronwall_eta_bound");
    pass = pass && c.pass && c.value <= 1.02;
    detail += " " + model + "=" + num(c.value);
  }
  return {pass, "max e^{-beta}|eta|/|h| over 1000 paths (bound 1.02):" + detail + failures};
}

Outcome bel_formula() {
  std::string detail, failures;
  bool pass = true;
  for (const std::string model : {"ou", "double_well", "rotated"}) {
    const Json x0 = model == "rotated" ? Json::array({0.5, -0.2}) : Json(0.5);
    const Json h = model == "rotated" ? Json::array({0.6, 0.8}) : Json(1.0);
    const auto r = run({{"experiment", "bel_check"},
                        {"model", {{"name", model}}},
                        {"sim", {{"dt", 1e-3}, {"seed", 105}, {"n_paths", 10000}}},
                        {"knobs", {{"x0", x0}, {"h", h}, {"battery", {"sin_1_e1", "tanh_e1"}}, {"times", {0.25, 0.5, 1.0}}}}},
                       "bel_" + model);
    pass = all_named(r, "bel_vs_fd_", failures) && pass;
    double worst = 0.0;
    for (const auto& c : r.checks) worst = std::max(worst, std::abs(c.value) / c.std_error);
    detail += " " + model + " max|z|=" + num(worst, 3);
  }
  // d/dx E sin(x e^{-1} + sqrt((1 - e^{-2}) / 2) Z) at x = 0.
  const auto law = oracle::ou_law(0.0, 1.0);
  const double anchor = std::exp(-1.0) * std::exp(-0.5 * law.var);
  fomin::SimConfig sim;
  sim.dt = 1e-3;
  sim.seed = 106;
  sim.n_paths = 20000;
  const fomin::Vector x = fomin::Vector::Zero(1);
  const double delta = fomin::default_fd_step(x);
  const auto fd = fomin::estimate_DPt_fd(fomin::ou_model(), [](const fomin::Vector& y) { return std::sin(y[0]); },
                                         x, fomin::Vector::Ones(1), 1.0, sim, delta);
  const bool anchored = std::abs(fd.value - anchor) <= 4.0 * fd.std_error + delta * delta;
  return {pass && anchored, "BEL vs FD within 4 SE for 18 cases:" + detail + "; <DP_1 sin(0),1>=" + num(fd.value) +
                                " +-" + num(fd.std_error, 2) + " (oracle " + num(anchor, 6) + ")" + failures};
}

Outcome voc_identity() {
  std::string detail, failures;
  bool pass = true;
  for (const std::string model : {"ou", "double_well"}) {
    const auto r = run({{"experiment", "semigroup_identities"},
                        {"model", {{"name", model}}},
                        {"sim", {{"dt", 1e-3}, {"t_final", 0.5}, {"seed", 107}, {"n_paths", 2000}}},
                        {"knobs", {{"n_quad", 16}, {"n_inner", 8}, {"commutation", false}}}},
                       "voc_" + model);
    const auto& c = r.check("variation_of_constants");
    pass = pass && c.pass;
    detail += " " + model + " residual=" + num(c.value, 3) + " (bound " + num(c.bound, 3) + ")";
  }
  return {pass, "t=0.5, n_quad=16:" + detail + failures};
}

Outcome commutation_identity() {
  const auto r = run({{"experiment", "semigroup_identities"},
                      {"model", {{"name", "ou"}}},
                      {"sim", {{"dt", 1e-3}, {"t_final", 0.5}, {"seed", 108}, {"n_paths", 2000}}},
                      {"knobs", {{"n_quad", 16}, {"n_inner", 8}, {"voc", false}}}},
                     "commutation_ou");
  const auto& c = r.check("commutation");
  return {c.pass, "OU t=0.5 residual=" + num(c.value, 3) + " +-" + num(c.std_error, 2) + " (bound " + num(c.bound, 3) + ")"};
}

Outcome small_time_envelope() {
  std::string detail;
  bool pass = true;
  for (const std::string model : {"ou", "double_well", "rotated"}) {
    const Json x0 = model == "rotated" ? Json::array({0.5, 0.0}) : Json(0.5);
    const Json h = model == "rotated" ? Json::array({1.0, 0.0}) : Json(1.0);
    const auto r = run({{"experiment", "small_t_scan"},
                        {"model", {{"name", model}}},
                        {"sim", {{"dt", 1e-3}, {"seed", 109}, {"n_paths", 10000}}},
                        {"knobs", {{"x0", x0}, {"h", h}, {"t_min", 0.05}, {"t_max", 1.0}, {"coarse_points", 5}, {"fine_points", 9}}}},
                       "small_t_" + model);
    const auto& c = r.check("envelope_constant");
    const auto& s = r.check("envelope_refinement_stability");
    pass = pass && c.pass && s.pass;
    detail += " " + model + " C=" + num(c.value, 3) + " drift=" + num(100 * s.value, 2) + "%";
  }
  return {pass, "envelope constant on 5 vs 9 points in [0.05,1], stability 25%:" + detail};
}

fomin::ExperimentResult g_ou_suite;

Outcome integration_by_parts() {
  g_ou_suite = run({{"experiment", "fomin_suite"},
                    {"model", {{"name", "ou"}}},
                    {"sim", {{"dt", 2e-3}, {"seed", 110}, {"n_paths", 100}}},
                    {"knobs",
                     {{"n_samples", 100000}, {"thin", 2.0}, {"burn_in", 5.0}, {"bandwidth", 0.1}, {"export_csv", true},
                      {"battery", {"sin_1_e1"}}, {"adjoint_phi", "sin_1_e1"}, {"adjoint_field", {"tanh_e1"}},
                      {"dirichlet_psi", "cos_1_e1"}, {"generator_points", {1.0}}}}},
                   "fomin_ou");
  const double exact = std::exp(-0.25);
  const auto& lhs = g_ou_suite.measurement("ibp_lhs_sin_1_e1_z1");
  const auto& rhs = g_ou_suite.measurement("ibp_rhs_sin_1_e1_z1");
  const auto& l2 = g_ou_suite.check("score_l2_error");
  const auto& centering = g_ou_suite.check("score_centering_z1");
  const bool ou_pass = std::abs(lhs.value - exact) <= 0.02 && std::abs(rhs.value - exact) <= 0.02 && l2.value < 0.07 &&
                       centering.pass;

  const auto rot = run({{"experiment", "fomin_suite"},
                        {"model", {{"name", "rotated"}}},
                        {"sim", {{"dt", 2e-3}, {"seed", 111}, {"n_paths", 100}}},
                        {"knobs",
                         {{"n_samples", 100000}, {"thin", 2.0}, {"burn_in", 5.0}, {"bandwidth", 0.1},
                          {"battery", {"sin_1_e1", "tanh_diag"}}, {"generator_points", {{1.0, 0.0}}}}},
                        {"tolerances", {{"score_l2", 0.3}}}},
                       "fomin_rotated");
  double worst = 0.0;
  for (const auto& c : rot.checks) {
    if (c.name.rfind("ibp_", 0) == 0) worst = std::max(worst, c.value);
  }
  const bool rot_pass = worst < 0.05;
  return {ou_pass && rot_pass, "OU lhs=" + num(lhs.value) + " rhs=" + num(rhs.value) + " (oracle " + num(exact) +
                                   " +-0.02), score L2 error=" + num(100 * l2.value, 3) + "% (<7%), centering " +
                                   num(centering.value, 2) + " +-" + num(centering.std_error, 2) +
                                   "; rotated max normalized residual=" + num(worst, 3) + " (<0.05)"};
}

Outcome main_inequality() {
  const auto r = run({{"experiment", "cp_scan"},
                      {"model", {{"name", "ou"}}},
                      {"sim", {{"dt", 2e-3}, {"seed", 110}, {"n_paths", 100}}},
                      {"knobs",
                       {{"sampler", "import"}, {"import_csv", (g_work / "fomin_ou" / "measure.csv").string()},
                        {"bandwidth", 0.1}, {"battery", "canonical"}, {"p", 2.0}}}},
                     "cp_ou");
  // E cos X / ||sin X||_2 under N(0, 1/2).
  const double exact = std::exp(-0.25) / std::sqrt(0.5 * (1.0 - std::exp(-1.0)));
  const auto& entry = r.measurement("ratio_sin_1_e1_z1");
  const auto& sup = r.check("cp_sup_ratio");
  const auto& stab = r.check("cp_half_battery_stability");
  const bool pass = sup.pass && std::abs(entry.value - exact) <= 0.05 && stab.pass;
  return {pass, "sup ratio=" + num(sup.value) + ", (sin,1,p=2) ratio=" + num(entry.value) + " (oracle " + num(exact, 5) +
                    " +-0.05), half vs full battery " + num(100 * stab.value, 3) + "% (<=25%)"};
}

Outcome adjoint_and_generator() {
  const auto& adj = g_ou_suite.check("adjointness");
  const auto& dir = g_ou_suite.check("dirichlet_form");
  const auto& gen = g_ou_suite.measurement("generator_x1");
  // 1/2 sin''(1) - 1/2 (2 * 1) sin'(1) with the exact OU score 2x.
  const double exact = -0.5 * std::sin(1.0) - std::cos(1.0);
  const double rel = std::abs(gen.value - exact) / std::abs(exact);
  const bool pass = adj.pass && dir.pass && rel <= 0.10;
  return {pass, "adjointness " + num(adj.value, 2) + " +-" + num(adj.std_error, 2) + ", Dirichlet form " +
                    num(dir.value, 2) + " +-" + num(dir.std_error, 2) + ", -1/2 D*D sin(1)=" + num(gen.value) +
                    " (oracle " + num(exact, 5) + ", rel err " + num(100 * rel, 3) + "% <=10%)"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const Json doc = {{"experiment", "fomin_suite"},
                    {"model", {{"name", "ou"}}},
                    {"sim", {{"dt", 2e-3}, {"seed", 112}, {"n_paths", 20}}},
                    {"knobs", {{"n_samples", 10000}, {"thin", 1.0}}},
                    {"output_dir", (g_work / "reproducibility").string()}};
  std::string reports[2];
  for (auto& report : reports) {
    const auto config = fomin::parse_config(doc);
    fomin::write_report(config, fomin::run_experiment(config), 0.0);
    report = slurp(g_work / "reproducibility" / "report.json");
  }
  const bool pass = !reports[0].empty() && reports[0] == reports[1];
  return {pass, "two fomin_suite runs, same config and seed: report.json " +
                    std::string(pass ? "byte-identical" : "differs") + " (" + std::to_string(reports[0].size()) +
                    " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_work = argv[1];
  std::filesystem::create_directories(g_work);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"moment bound", moment_bound},
      {"tail bound", tail_bound},
      {"pathwise Gronwall bound", gronwall_bound},
      {"Bismut-Elworthy-Li formula", bel_formula},
      {"variation-of-constants identity", voc_identity},
      {"commutation identity", commutation_identity},
      {"small-time envelope", small_time_envelope},
      {"integration by parts", integration_by_parts},
      {"main inequality constant", main_inequality},
      {"adjoint and generator", adjoint_and_generator},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %-32s %s [%.0fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria pass\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
