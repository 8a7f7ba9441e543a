#pragma once

#include "fomin/drift_models.hpp"
#include "fomin/mc_estimate.hpp"
#include "fomin/sde_engine.hpp"
#include "fomin/test_functions.hpp"

#include <functional>
#include <vector>

namespace fomin {

using Observable = std::function<double(const Vector&)>;

/// Multiplier of the standard error in all "consistent with zero" checks.
inline constexpr double kDefaultSigmaMultiplier = 4.0;

/// Central finite-difference step 1e-3 (1 + |x|).
double default_fd_step(const Vector& x);

/// P_t phi(x) = E[phi(X(t, x))].
MCEstimate estimate_Pt(const DriftModel& model, const Observable& phi, const Vector& x, double t,
                       const SimConfig& config);

/// S_t phi(x) = E[phi(X(t, x)) exp(-int_0^t V(X(s, x)) ds)].
MCEstimate estimate_St(const DriftModel& model, const Observable& phi, const Vector& x, double t,
                       const SimConfig& config);

/// Gradient of S_t phi in direction h via the Bismut-Elworthy-Li formula:
///   I_1 = (1/t) E[phi(X_t) e^{-beta_t} int_0^t <eta^h, dW>]
///   I_2 = -E[phi(X_t) e^{-beta_t} int_0^t (1 - s/t) <V'(X_s), eta^h_s> ds]
/// The time integral in I_2 sits inside the expectation. The SE of `total` is
/// the per-path SE of I_1 + I_2.
struct BelEstimate {
  MCEstimate i1;
  MCEstimate i2;
  MCEstimate total;
};

BelEstimate estimate_DSt_bel(const DriftModel& model, const Observable& phi, const Vector& x,
                             const Vector& h, double t, const SimConfig& config);

/// (P_t phi(x + delta h) - P_t phi(x - delta h)) / (2 delta), common random
/// numbers, SE from the paired per-path differences.
MCEstimate estimate_DPt_fd(const DriftModel& model, const Observable& phi, const Vector& x,
                           const Vector& h, double t, const SimConfig& config, double delta);

/// Same central difference for S_t.
MCEstimate estimate_DSt_fd(const DriftModel& model, const Observable& phi, const Vector& x,
                           const Vector& h, double t, const SimConfig& config, double delta);

struct IdentityReport {
  MCEstimate lhs;
  MCEstimate rhs;
  double residual = 0.0;   // mean of the per-path lhs - rhs
  double std_error = 0.0;  // SE of that mean
  double tolerance = 0.0;  // non-statistical allowance (quadrature, discretisation)
  double bound = 0.0;      // sigma * std_error + tolerance
  bool pass = false;
};

struct VocOptions {
  int n_quad = 16;
  /// Inner paths per quadrature node for P_s phi at the intermediate state.
  /// 0 reuses the outer path's own endpoint (Markov property, one sample).
  int n_inner = 16;
  double sigma = kDefaultSigmaMultiplier;
};

/// P_t phi = S_t phi + int_0^t S_{t-s}(V P_s phi) ds at x. Outer paths are
/// simulated once to t; at each trapezoid node u = t - s the inner value
/// P_s phi(X_u) is a nested estimate started from the outer state.
/// `tolerance` is the pathwise quadrature defect
///   mean |phi(X_t)| |1 - e^{-beta_t} - sum_j w_j V(X_{u_j}) e^{-beta_{u_j}}|,
/// which bounds the bias the trapezoid rule can introduce.
IdentityReport check_voc_identity(const DriftModel& model, const Observable& phi, const Vector& x,
                                  double t, const SimConfig& config,
                                  const VocOptions& options = {});

struct CommutationOptions {
  int n_quad = 16;
  int n_inner = 16;
  double delta = 0.0;  // 0 selects default_fd_step
  double sigma = kDefaultSigmaMultiplier;
  /// Extra allowance added to the bound (0 = pure sigma test).
  double allowance = 0.0;
};

/// P_t(<D phi, h>)(x) = <D P_t phi(x), h> - int_0^t P_{t-s}(<b' h, D P_s phi>)(x) ds.
/// lhs reports the first expression, rhs the second. The inner D P_s phi at
/// each intermediate state uses central differences along b'(X_u) h with
/// common random numbers.
IdentityReport check_commutation_identity(const DriftModel& model, const TestFunction& phi,
                                          const Vector& x, const Vector& h, double t,
                                          const SimConfig& config,
                                          const CommutationOptions& options = {});

struct SmallTimePoint {
  double t = 0.0;
  MCEstimate derivative;  // BEL total
  MCEstimate moment;      // P_t |phi|^p
  double envelope = 0.0;  // (1 + t^{-1/2}) (1 + |x|^{2N-1}) (P_t |phi|^p)^{1/p}
  double ratio = 0.0;     // |derivative| / envelope
};

struct SmallTimeScan {
  std::vector<SmallTimePoint> points;
  double slope = 0.0;      // least squares of log|derivative| on log t
  double max_ratio = 0.0;  // fitted envelope constant C_p
  bool inconclusive = false;
};

/// Small-time behaviour of the Feynman-Kac gradient: fits the log-log slope
/// and the constant of the t^{-1/2} envelope. Times are snapped to the dt
/// grid. Unresolved points (|estimate| < 2 SE) make the slope inconclusive.
SmallTimeScan scan_small_t_singularity(const DriftModel& model, const Observable& phi,
                                       const Vector& x, const Vector& h,
                                       const std::vector<double>& t_grid, const SimConfig& config,
                                       double p = 2.0);

/// n log-spaced times from t_max down to t_min.
std::vector<double> log_time_grid(double t_min, double t_max, int n);

}  // namespace fomin
