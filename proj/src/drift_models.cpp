#include "fomin/drift_models.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

namespace fomin {

void HypothesisParams::validate() const {
  if (!(omega > 0.0)) throw std::invalid_argument("HypothesisParams: omega must be > 0");
  if (!(a >= 0.0)) throw std::invalid_argument("HypothesisParams: a must be >= 0");
  if (!(K > 0.0)) throw std::invalid_argument("HypothesisParams: K must be > 0");
  if (N < 1) throw std::invalid_argument("HypothesisParams: N must be >= 1");
  if (d < 1) throw std::invalid_argument("HypothesisParams: d must be >= 1");
}

DriftModel::DriftModel(std::string name, HypothesisParams params, DriftFunction drift,
                       JacobianFunction jacobian, std::optional<StationaryOracle> oracle)
    : name_(std::move(name)),
      params_(params),
      drift_(std::move(drift)),
      jacobian_(std::move(jacobian)),
      oracle_(std::move(oracle)) {
  params_.validate();
  if (!drift_ || !jacobian_) {
    throw std::invalid_argument("DriftModel '" + name_ + "': drift and jacobian are required");
  }
}

DriftModel DriftModel::with_params(const HypothesisParams& params) const {
  if (params.d != params_.d) {
    throw std::invalid_argument("DriftModel::with_params: dimension is fixed by the drift");
  }
  DriftModel copy = *this;
  params.validate();
  copy.params_ = params;
  return copy;
}

DriftModel ou_model(int d) {
  HypothesisParams params{.omega = 1.0, .a = 0.0, .K = 2.0, .N = 1, .d = d};
  StationaryOracle oracle;
  oracle.description = "centred Gaussian, covariance I/2";
  oracle.gaussian_covariance = 0.5 * Matrix::Identity(d, d);
  oracle.linear_drift = -Matrix::Identity(d, d);
  oracle.log_density = [](const Vector& x) { return -x.squaredNorm(); };
  oracle.grad_log_density = [](const Vector& x) -> Vector { return -2.0 * x; };
  return DriftModel(
      "ou", params,
      [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out = -x; },
      [d](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) {
        out = -Matrix::Identity(d, d);
      },
      std::move(oracle));
}

DriftModel double_well_model() {
  // |x - x^3| + |1 - 3x^2| <= 4 (1 + x^4); cubic growth needs N = 2.
  HypothesisParams params{.omega = 1.0, .a = 1.0, .K = 4.0, .N = 2, .d = 1};
  StationaryOracle oracle;
  oracle.description = "density proportional to exp(x^2 - x^4/2)";
  oracle.log_density = [](const Vector& x) {
    const double s = x[0] * x[0];
    return s - 0.5 * s * s;
  };
  oracle.grad_log_density = [](const Vector& x) -> Vector {
    Vector g(1);
    g[0] = 2.0 * x[0] - 2.0 * x[0] * x[0] * x[0];
    return g;
  };
  return DriftModel(
      "double_well", params,
      [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
        out[0] = x[0] - x[0] * x[0] * x[0];
      },
      [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) {
        out(0, 0) = 1.0 - 3.0 * x[0] * x[0];
      },
      std::move(oracle));
}

DriftModel rotated_model() {
  HypothesisParams params{.omega = 1.0, .a = 0.0, .K = 3.0, .N = 1, .d = 2};
  Matrix A(2, 2);
  A << -1.0, -1.0, 1.0, -1.0;
  StationaryOracle oracle;
  // A + A^T = -2I, so Sigma = I/2 solves A Sigma + Sigma A^T + I = 0.
  oracle.description = "centred Gaussian, covariance I/2 (Lyapunov equation)";
  oracle.gaussian_covariance = 0.5 * Matrix::Identity(2, 2);
  oracle.linear_drift = A;
  oracle.log_density = [](const Vector& x) { return -x.squaredNorm(); };
  oracle.grad_log_density = [](const Vector& x) -> Vector { return -2.0 * x; };
  return DriftModel(
      "rotated", params,
      [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
        out[0] = -x[0] - x[1];
        out[1] = x[0] - x[1];
      },
      [A](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out = A; },
      std::move(oracle));
}

std::vector<std::string> builtin_model_names() { return {"ou", "double_well", "rotated"}; }

DriftModel builtin_model(const std::string& name, const ParamOverrides& overrides) {
  const int d = overrides.d.value_or(name == "rotated" ? 2 : 1);
  std::optional<DriftModel> model;
  if (name == "ou") {
    model = ou_model(d);
  } else if (name == "double_well") {
    if (d != 1) throw std::invalid_argument("double_well is one-dimensional");
    model = double_well_model();
  } else if (name == "rotated") {
    if (d != 2) throw std::invalid_argument("rotated is two-dimensional");
    model = rotated_model();
  } else {
    throw std::invalid_argument("unknown model '" + name + "'");
  }
  HypothesisParams p = model->params();
  if (overrides.omega) p.omega = *overrides.omega;
  if (overrides.a) p.a = *overrides.a;
  if (overrides.K) p.K = *overrides.K;
  if (overrides.N) p.N = *overrides.N;
  return model->with_params(p);
}

namespace {

void require_finite_input(const Vector& x, const DriftModel& model) {
  if (x.size() != model.dim()) {
    throw std::invalid_argument("model '" + model.name() + "': point has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(model.dim()));
  }
  if (!x.allFinite()) throw std::invalid_argument("model '" + model.name() + "': non-finite input");
}

}  // namespace

Vector eval_drift(const DriftModel& model, const Vector& x) {
  require_finite_input(x, model);
  Vector out(model.dim());
  model.drift_into(x, out);
  if (!out.allFinite()) {
    throw ModelEvaluationError("model '" + model.name() + "': drift is not finite");
  }
  return out;
}

Matrix eval_jacobian(const DriftModel& model, const Vector& x) {
  require_finite_input(x, model);
  Matrix out(model.dim(), model.dim());
  model.jacobian_into(x, out);
  if (!out.allFinite()) {
    throw ModelEvaluationError("model '" + model.name() + "': jacobian is not finite");
  }
  return out;
}

namespace {

double operator_norm(const Matrix& m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace

HypothesisReport check_hypothesis(const DriftModel& model, const std::vector<Vector>& grid,
                                  double tol) {
  if (grid.empty()) throw std::invalid_argument("check_hypothesis: empty grid");
  const HypothesisParams& p = model.params();
  HypothesisReport report;
  report.n_points = grid.size();
  report.dissipativity_slack = std::numeric_limits<double>::infinity();
  report.growth_slack = std::numeric_limits<double>::infinity();
  for (const Vector& x : grid) {
    const Vector b = eval_drift(model, x);
    const Matrix jac = eval_jacobian(model, x);
    const double r2 = x.squaredNorm();
    const double diss = -p.omega * r2 + p.a - b.dot(x);
    if (diss < report.dissipativity_slack) {
      report.dissipativity_slack = diss;
      report.dissipativity_worst_point = x;
    }
    const double growth = potential_V(p, x) - b.norm() - operator_norm(jac);
    if (growth < report.growth_slack) {
      report.growth_slack = growth;
      report.growth_worst_point = x;
    }
  }
  report.dissipativity_pass = report.dissipativity_slack >= -tol;
  report.growth_pass = report.growth_slack >= -tol;
  report.pass = report.dissipativity_pass && report.growth_pass;
  return report;
}

std::vector<Vector> radial_grid(int d, double radius, int n_points) {
  if (d < 1 || n_points < 2 || !(radius > 0.0)) {
    throw std::invalid_argument("radial_grid: bad arguments");
  }
  std::vector<Vector> grid;
  grid.reserve(n_points + 3);
  if (d == 1) {
    for (int i = 0; i < n_points; ++i) {
      grid.push_back(Vector::Constant(1, -radius + 2.0 * radius * i / (n_points - 1)));
    }
    for (double v : {0.0, 1.0, -1.0}) grid.push_back(Vector::Constant(1, v));
    return grid;
  }
  const int n_shells = std::max(2, static_cast<int>(std::sqrt(static_cast<double>(n_points))));
  const int n_dirs = std::max(1, n_points / n_shells);
  // Deterministic directions: a circle in d = 2, a Fibonacci-style spiral
  // lifted to d dimensions otherwise.
  std::vector<Vector> directions;
  for (int k = 0; k < n_dirs; ++k) {
    Vector u = Vector::Zero(d);
    if (d == 2) {
      const double theta = 2.0 * std::numbers::pi * k / n_dirs;
      u << std::cos(theta), std::sin(theta);
    } else {
      for (int j = 0; j < d; ++j) {
        u[j] = std::sin((k + 1) * (j + 1) * 2.399963229728653 + 0.5 * j);
      }
      if (u.norm() == 0.0) u[0] = 1.0;
      u.normalize();
    }
    directions.push_back(u);
  }
  grid.push_back(Vector::Zero(d));
  for (int s = 1; s <= n_shells; ++s) {
    const double r = radius * s / n_shells;
    for (const Vector& u : directions) grid.push_back(r * u);
  }
  for (int j = 0; j < d; ++j) grid.push_back(Vector::Unit(d, j));
  return grid;
}

namespace {

double int_power(double base, int exponent) {
  double result = 1.0;
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

}  // namespace

double potential_V(const HypothesisParams& params, const Eigen::Ref<const Vector>& x) {
  return params.K * (1.0 + int_power(x.squaredNorm(), params.N));
}

Vector potential_gradient(const HypothesisParams& params, const Eigen::Ref<const Vector>& x) {
  const double scale = 2.0 * params.N * params.K * int_power(x.squaredNorm(), params.N - 1);
  return scale * x;
}

DriftModel tame_drift(const DriftModel& model, int n) {
  if (n < 1) throw std::invalid_argument("tame_drift: n must be >= 1");
  const DriftModel base = model;
  const double omega = base.params().omega;
  const int N = base.params().N;
  const int d = base.dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  auto drift = [base, omega, N, inv_n, d](const Eigen::Ref<const Vector>& x,
                                          Eigen::Ref<Vector> out) {
    const double r2 = x.squaredNorm();
    const double growth = int_power(r2, N + 1) * inv_n;
    base.drift_into(x, out);
    if (!std::isfinite(growth)) {
      out = -omega * x;
      return;
    }
    const double g = 1.0 / (1.0 + growth);
    for (int j = 0; j < d; ++j) out[j] = g * (out[j] + omega * x[j]) - omega * x[j];
  };

  auto jacobian = [base, omega, N, inv_n, d](const Eigen::Ref<const Vector>& x,
                                             Eigen::Ref<Matrix> out) {
    const double r2 = x.squaredNorm();
    const double r2N = int_power(r2, N);
    const double growth = r2N * r2 * inv_n;
    if (!std::isfinite(growth)) {
      out = -omega * Matrix::Identity(d, d);
      return;
    }
    const double g = 1.0 / (1.0 + growth);
    thread_local Vector shifted;
    shifted.resize(d);
    base.drift_into(x, shifted);
    base.jacobian_into(x, out);
    // f_n' = g (b' + omega I) + (b + omega x) grad g^T - omega I,
    // grad g = -g^2 (2N+2) |x|^{2N} x / n
    const double c = -g * g * (2.0 * N + 2.0) * r2N * inv_n;
    for (int i = 0; i < d; ++i) {
      const double si = (shifted[i] + omega * x[i]) * c;
      for (int j = 0; j < d; ++j) {
        const double diag = i == j ? omega : 0.0;
        out(i, j) = g * (out(i, j) + diag) + si * x[j] - diag;
      }
    }
  };

  return DriftModel(base.name() + "_tamed_" + std::to_string(n), base.params(), std::move(drift),
                    std::move(jacobian));
}

double oracle_expectation_1d(const DriftModel& model, const std::function<double(double)>& f) {
  if (model.dim() != 1 || !model.oracle() || !model.oracle()->log_density) {
    throw std::invalid_argument("oracle_expectation_1d: needs a 1-d model with an oracle density");
  }
  const StationaryOracle& oracle = *model.oracle();
  Vector point(1);
  auto density = [&](double x) {
    point[0] = x;
    return std::exp(oracle.log_density(point));
  };
  using boost::math::quadrature::gauss_kronrod;
  const double lo = oracle.quadrature_lo;
  const double hi = oracle.quadrature_hi;
  const double z = gauss_kronrod<double, 61>::integrate(density, lo, hi, 15, 1e-13);
  const double num = gauss_kronrod<double, 61>::integrate(
      [&](double x) { return f(x) * density(x); }, lo, hi, 15, 1e-13);
  return num / z;
}

}  // namespace fomin
