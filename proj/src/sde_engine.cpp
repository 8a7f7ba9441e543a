#include "fomin/sde_engine.hpp"

#include "fomin/parallel.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace fomin {

std::string to_string(Scheme scheme) {
  return scheme == Scheme::euler_maruyama ? "euler_maruyama" : "tamed_euler";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "euler_maruyama") return Scheme::euler_maruyama;
  if (name == "tamed_euler") return Scheme::tamed_euler;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

int steps_for(double t, double dt) {
  if (!(t > 0.0) || !(dt > 0.0)) throw std::invalid_argument("steps_for: t and dt must be > 0");
  return std::max(1, static_cast<int>(std::llround(t / dt)));
}

int SimConfig::n_steps() const {
  const int n = steps_for(t_final, dt);
  if (std::abs(n * dt - t_final) > kHorizonTolerance * t_final) {
    throw std::invalid_argument("SimConfig: t_final is not a whole number of dt steps");
  }
  return n;
}

int SimConfig::effective_taming_n() const {
  return taming_n > 0 ? taming_n : std::max(1, static_cast<int>(std::llround(1.0 / dt)));
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
  if (!(t_final > 0.0)) throw std::invalid_argument("SimConfig: t_final must be > 0");
  if (dt > t_final * (1.0 + kHorizonTolerance)) {
    throw std::invalid_argument("SimConfig: dt must not exceed t_final");
  }
  if (n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
  if (taming_n < 0) throw std::invalid_argument("SimConfig: taming_n must be >= 0");
  (void)n_steps();
}

SimConfig SimConfig::with_horizon(double t) const {
  SimConfig copy = *this;
  copy.t_final = steps_for(t, dt) * dt;
  return copy;
}

DriftModel stepping_model(const DriftModel& model, const SimConfig& config) {
  if (config.scheme == Scheme::tamed_euler) return tame_drift(model, config.effective_taming_n());
  return model;
}

PathStepper::PathStepper(const DriftModel& stepping, const HypothesisParams& certificate,
                         const Vector& x0, const Vector& h, double dt, rng::StreamId stream,
                         bool track_tangent)
    : model_(&stepping),
      certificate_(certificate),
      dt_(dt),
      sqrt_dt_(std::sqrt(dt)),
      track_tangent_(track_tangent),
      stream_(stream),
      x_(x0),
      eta_(h),
      dw_(Vector::Zero(x0.size())),
      drift_(x0.size()),
      eta_next_(x0.size()),
      jac_(x0.size(), x0.size()) {
  if (x0.size() != stepping.dim()) throw std::invalid_argument("PathStepper: x0 has wrong dimension");
  if (track_tangent_ && h.size() != stepping.dim()) {
    throw std::invalid_argument("PathStepper: h has wrong dimension");
  }
  if (!x0.allFinite()) throw std::invalid_argument("PathStepper: x0 must be finite");
  if (track_tangent_ && !h.allFinite()) throw std::invalid_argument("PathStepper: h must be finite");
}

double PathStepper::potential_slope_along_eta() const {
  // <V'(x), eta> = 2 N K |x|^{2N-2} <x, eta>
  const double r2 = x_.squaredNorm();
  double power = 1.0;
  for (int i = 1; i < certificate_.N; ++i) power *= r2;
  return 2.0 * certificate_.N * certificate_.K * power * x_.dot(eta_);
}

void PathStepper::step() {
  if (diverged_) return;
  const Eigen::Index d = x_.size();
  double* x = x_.data();
  double* dw = dw_.data();
  for (Eigen::Index j = 0; j < d; ++j) dw[j] = sqrt_dt_ * stream_.normal();
  model_->drift_into(x_, drift_);
  beta_ += potential() * dt_;
  bool finite = std::isfinite(beta_);
  if (track_tangent_) {
    model_->jacobian_into(x_, jac_);
    double* eta = eta_.data();
    double* next = eta_next_.data();
    const double* jac = jac_.data();  // column-major
    double ito_step = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      ito_step += eta[i] * dw[i];
      next[i] = 0.0;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) next[i] += jac[j * d + i] * eta[j];
    }
    ito_ += ito_step;
    finite = finite && std::isfinite(ito_);
    for (Eigen::Index i = 0; i < d; ++i) {
      eta[i] += dt_ * next[i];
      finite = finite && std::isfinite(eta[i]);
    }
  }
  const double* drift = drift_.data();
  for (Eigen::Index j = 0; j < d; ++j) {
    x[j] += dt_ * drift[j] + dw[j];
    finite = finite && std::isfinite(x[j]);
  }
  ++k_;
  if (!finite) diverged_ = true;
}

std::vector<PathBundle> simulate_paths(const DriftModel& model, const Vector& x0, const Vector& h,
                                       const SimConfig& config) {
  config.validate();
  const int n_steps = config.n_steps();
  const DriftModel stepping = stepping_model(model, config);
  std::vector<PathBundle> bundles(static_cast<std::size_t>(config.n_paths));
  parallel_for(bundles.size(), [&](std::size_t i) {
    PathStepper path(stepping, model.params(), x0, h, config.dt, {config.seed, i, 0});
    PathBundle& b = bundles[i];
    b.x0 = x0;
    b.h = h;
    const auto reserve = static_cast<std::size_t>(n_steps) + 1;
    b.times.reserve(reserve);
    b.X.reserve(reserve);
    b.eta.reserve(reserve);
    b.beta.reserve(reserve);
    b.ito.reserve(reserve);
    for (int k = 0;; ++k) {
      if (path.diverged()) {
        b.diverged = true;
        b.diverged_at = k;
        break;
      }
      b.times.push_back(path.time());
      b.X.push_back(path.X());
      b.eta.push_back(path.eta());
      b.beta.push_back(path.beta());
      b.ito.push_back(path.ito());
      if (k == n_steps) break;
      path.step();
    }
  });
  return bundles;
}

std::size_t count_diverged(const std::vector<PathBundle>& paths) {
  std::size_t n = 0;
  for (const auto& p : paths) n += p.diverged ? 1 : 0;
  return n;
}

EtaBoundReport check_eta_bound(const PathBundle& bundle, double tol_disc) {
  EtaBoundReport report;
  const double h_norm = bundle.h.norm();
  if (h_norm == 0.0) {
    report.vacuous = true;
    return report;
  }
  for (std::size_t k = 0; k < bundle.eta.size(); ++k) {
    const double ratio = std::exp(-bundle.beta[k]) * bundle.eta[k].norm() / h_norm;
    report.worst_ratio = std::max(report.worst_ratio, ratio);
  }
  report.pass = !bundle.diverged && report.worst_ratio <= 1.0 + tol_disc;
  return report;
}

void write_trajectory_csv(const PathBundle& bundle, std::ostream& out) {
  const Eigen::Index d = bundle.x0.size();
  out << "t";
  for (Eigen::Index j = 0; j < d; ++j) out << ",X_" << j + 1;
  for (Eigen::Index j = 0; j < d; ++j) out << ",eta_" << j + 1;
  out << ",beta,ito\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < bundle.times.size(); ++k) {
    out << bundle.times[k];
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << bundle.X[k][j];
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << bundle.eta[k][j];
    out << ',' << bundle.beta[k] << ',' << bundle.ito[k] << '\n';
  }
}

}  // namespace fomin
