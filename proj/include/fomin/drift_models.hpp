#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fomin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a drift or Jacobian evaluation produces non-finite values.
class ModelEvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Certificate constants for the dissipativity and growth conditions
///   <b(x), x> <= -omega |x|^2 + a,
///   |b(x)| + ||b'(x)|| <= K (1 + |x|^{2N}).
struct HypothesisParams {
  double omega = 1.0;
  double a = 0.0;
  double K = 1.0;
  int N = 1;
  int d = 1;

  void validate() const;
};

using DriftFunction = std::function<void(const Eigen::Ref<const Vector>&, Eigen::Ref<Vector>)>;
using JacobianFunction = std::function<void(const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix>)>;

/// Analytic facts about a built-in model, used as independent oracles.
struct StationaryOracle {
  std::string description;
  /// Stationary covariance when the invariant law is a centred Gaussian.
  std::optional<Matrix> gaussian_covariance;
  /// A with b(x) = A x, for linear models (Gaussian transition laws).
  std::optional<Matrix> linear_drift;
  /// Unnormalised log density of the invariant law and its gradient.
  std::function<double(const Vector&)> log_density;
  std::function<Vector(const Vector&)> grad_log_density;
  /// Integration window for one-dimensional quadrature of the density.
  double quadrature_lo = -6.0;
  double quadrature_hi = 6.0;
};

/// A drift b with analytic Jacobian b' and its certificate. Immutable and
/// safe to share across threads.
class DriftModel {
 public:
  DriftModel(std::string name, HypothesisParams params, DriftFunction drift,
             JacobianFunction jacobian, std::optional<StationaryOracle> oracle = std::nullopt);

  const std::string& name() const { return name_; }
  const HypothesisParams& params() const { return params_; }
  int dim() const { return params_.d; }
  const std::optional<StationaryOracle>& oracle() const { return oracle_; }

  /// Unchecked evaluation for hot loops; `out` must already have size d.
  void drift_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
    drift_(x, out);
  }
  void jacobian_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const {
    jacobian_(x, out);
  }

  /// Copy with a different certificate (the drift is unchanged).
  DriftModel with_params(const HypothesisParams& params) const;

 private:
  std::string name_;
  HypothesisParams params_;
  DriftFunction drift_;
  JacobianFunction jacobian_;
  std::optional<StationaryOracle> oracle_;
};

// Built-in models.
DriftModel ou_model(int d = 1);       // b(x) = -x
DriftModel double_well_model();       // b(x) = x - x^3, d = 1
DriftModel rotated_model();           // b(x) = -x + J x, J = [[0,-1],[1,0]]

struct ParamOverrides {
  std::optional<double> omega, a, K;
  std::optional<int> N, d;
};

/// Looks up "ou", "double_well" or "rotated"; applies certificate overrides.
DriftModel builtin_model(const std::string& name, const ParamOverrides& overrides = {});
std::vector<std::string> builtin_model_names();

Vector eval_drift(const DriftModel& model, const Vector& x);
Matrix eval_jacobian(const DriftModel& model, const Vector& x);

struct HypothesisReport {
  // Slack = rhs - lhs of each inequality; the worst (smallest) over the grid.
  double dissipativity_slack = 0.0;
  Vector dissipativity_worst_point;
  double growth_slack = 0.0;
  Vector growth_worst_point;
  bool dissipativity_pass = false;
  bool growth_pass = false;
  bool pass = false;
  std::size_t n_points = 0;
};

HypothesisReport check_hypothesis(const DriftModel& model, const std::vector<Vector>& grid,
                                  double tol);

/// Radial shells up to `radius`. In d = 1 a uniform grid on [-radius, radius]
/// that contains 0 and +-1.
std::vector<Vector> radial_grid(int d, double radius = 10.0, int n_points = 10000);

/// V(x) = K (1 + |x|^{2N}).
double potential_V(const HypothesisParams& params, const Eigen::Ref<const Vector>& x);
/// V'(x) = 2 N K |x|^{2N-2} x.
Vector potential_gradient(const HypothesisParams& params, const Eigen::Ref<const Vector>& x);
inline double potential_V(const DriftModel& model, const Vector& x) {
  return potential_V(model.params(), x);
}

/// Taming transform f_n(x) = (b(x) + omega x) / (1 + |x|^{2N+2} / n) - omega x.
/// Keeps the dissipativity inequality pointwise and makes the drift grow at
/// most linearly. The returned model carries the same certificate and no oracle.
DriftModel tame_drift(const DriftModel& model, int n);

/// E_nu[f] for a one-dimensional model with an oracle density, by adaptive
/// Gauss-Kronrod quadrature over the oracle window.
double oracle_expectation_1d(const DriftModel& model, const std::function<double(double)>& f);

}  // namespace fomin
