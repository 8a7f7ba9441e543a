#pragma once

#include "fomin/drift_models.hpp"
#include "fomin/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace fomin {

/// Raised by estimators when any simulated path produced non-finite values.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme { euler_maruyama, tamed_euler };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct SimConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  Scheme scheme = Scheme::tamed_euler;
  /// Taming index n for tamed_euler; 0 selects n = round(1 / dt).
  int taming_n = 0;
  std::uint64_t seed = 0;
  int n_paths = 1000;

  /// round(t_final / dt); throws if that does not reconstruct t_final.
  int n_steps() const;
  int effective_taming_n() const;
  void validate() const;
  /// Same settings, horizon t (snapped onto the dt grid).
  SimConfig with_horizon(double t) const;
};

/// Relative tolerance for t_final = n_steps * dt.
inline constexpr double kHorizonTolerance = 1e-12;

/// Discretisation slack of the pathwise Gronwall check, as a multiple of dt.
inline constexpr double kEtaSlackPerStep = 20.0;

/// Number of dt steps closest to t (at least 1).
int steps_for(double t, double dt);

/// The drift actually integrated: b itself, or the tamed f_n.
DriftModel stepping_model(const DriftModel& model, const SimConfig& config);

/// One discretised path of X, the tangent flow eta = D_x X h, the
/// Feynman-Kac exponent beta = int V(X) ds and the Ito integral int <eta, dW>.
/// Explicit Euler for everything; beta and the Ito sum use left endpoints.
/// With track_tangent off, eta and the Ito integral stay at their initial
/// values and the Jacobian is never evaluated.
class PathStepper {
 public:
  PathStepper(const DriftModel& stepping, const HypothesisParams& certificate, const Vector& x0,
              const Vector& h, double dt, rng::StreamId stream, bool track_tangent = true);

  void step();

  int step_index() const { return k_; }
  double time() const { return k_ * dt_; }
  double dt() const { return dt_; }
  const Vector& X() const { return x_; }
  const Vector& eta() const { return eta_; }
  double beta() const { return beta_; }
  double ito() const { return ito_; }
  bool diverged() const { return diverged_; }
  const Vector& last_increment() const { return dw_; }

  /// V(X) at the current state.
  double potential() const { return potential_V(certificate_, x_); }
  /// <V'(X), eta> at the current state.
  double potential_slope_along_eta() const;

 private:
  const DriftModel* model_;
  HypothesisParams certificate_;
  double dt_;
  double sqrt_dt_;
  bool track_tangent_;
  rng::GaussianStream stream_;
  int k_ = 0;
  Vector x_, eta_, dw_, drift_, eta_next_;
  Matrix jac_;
  double beta_ = 0.0;
  double ito_ = 0.0;
  bool diverged_ = false;
};

struct PathBundle {
  std::vector<double> times;
  std::vector<Vector> X;
  std::vector<Vector> eta;
  std::vector<double> beta;
  std::vector<double> ito;
  Vector x0;
  Vector h;
  bool diverged = false;
  /// Index of the first non-finite record when diverged (records stop there).
  int diverged_at = -1;
};

/// n_paths bundles; path i uses stream (seed, i) only.
std::vector<PathBundle> simulate_paths(const DriftModel& model, const Vector& x0, const Vector& h,
                                       const SimConfig& config);

std::size_t count_diverged(const std::vector<PathBundle>& paths);

struct EtaBoundReport {
  double worst_ratio = 0.0;  // max_k exp(-beta_k) |eta_k| / |h|
  bool pass = true;
  bool vacuous = false;      // h = 0
};

EtaBoundReport check_eta_bound(const PathBundle& bundle, double tol_disc);

/// Columns t, X_1..X_d, eta_1..eta_d, beta, ito.
void write_trajectory_csv(const PathBundle& bundle, std::ostream& out);

}  // namespace fomin
