#include "fomin/semigroup.hpp"

#include "fomin/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fomin {

namespace {

constexpr std::uint64_t kVocInnerSubstream = 1;
constexpr std::uint64_t kCommutationInnerSubstream = 1u << 20;

void require_positive_time(double t, const char* who) {
  if (!(t > 0.0)) throw std::invalid_argument(std::string(who) + ": t must be > 0");
}

[[noreturn]] void throw_diverged(const char* who, std::size_t path) {
  throw DivergenceError(std::string(who) + ": path " + std::to_string(path) +
                        " diverged (non-finite state)");
}

/// Runs `steps` steps and returns the final stepper state.
PathStepper run_to_end(const DriftModel& stepping, const HypothesisParams& cert, const Vector& x0,
                       int steps, double dt, rng::StreamId stream, const char* who) {
  PathStepper path(stepping, cert, x0, Vector(), dt, stream, false);
  for (int k = 0; k < steps; ++k) path.step();
  if (path.diverged()) throw_diverged(who, stream.path);
  return path;
}

/// Trapezoid nodes on the step grid: indices round(j n / n_quad), deduplicated,
/// with weights from the actual node times.
struct Quadrature {
  std::vector<int> index;
  std::vector<double> weight;
};

Quadrature trapezoid_on_grid(int n_steps, int n_quad, double dt) {
  if (n_quad < 1) throw std::invalid_argument("quadrature needs n_quad >= 1");
  Quadrature q;
  for (int j = 0; j <= n_quad; ++j) {
    const int idx = static_cast<int>(std::llround(static_cast<double>(j) * n_steps / n_quad));
    if (q.index.empty() || q.index.back() != idx) q.index.push_back(idx);
  }
  q.weight.assign(q.index.size(), 0.0);
  for (std::size_t j = 0; j + 1 < q.index.size(); ++j) {
    const double width = (q.index[j + 1] - q.index[j]) * dt;
    q.weight[j] += 0.5 * width;
    q.weight[j + 1] += 0.5 * width;
  }
  return q;
}

}  // namespace

double default_fd_step(const Vector& x) { return 1e-3 * (1.0 + x.norm()); }

MCEstimate estimate_Pt(const DriftModel& model, const Observable& phi, const Vector& x, double t,
                       const SimConfig& config) {
  require_positive_time(t, "estimate_Pt");
  const SimConfig cfg = config.with_horizon(t);
  cfg.validate();
  const DriftModel stepping = stepping_model(model, cfg);
  const int steps = cfg.n_steps();
  std::vector<double> samples(cfg.n_paths);
  parallel_for(samples.size(), [&](std::size_t i) {
    const PathStepper path =
        run_to_end(stepping, model.params(), x, steps, cfg.dt, {cfg.seed, i, 0}, "estimate_Pt");
    samples[i] = phi(path.X());
  });
  return summarize(samples);
}

MCEstimate estimate_St(const DriftModel& model, const Observable& phi, const Vector& x, double t,
                       const SimConfig& config) {
  require_positive_time(t, "estimate_St");
  const SimConfig cfg = config.with_horizon(t);
  cfg.validate();
  const DriftModel stepping = stepping_model(model, cfg);
  const int steps = cfg.n_steps();
  std::vector<double> samples(cfg.n_paths);
  parallel_for(samples.size(), [&](std::size_t i) {
    const PathStepper path =
        run_to_end(stepping, model.params(), x, steps, cfg.dt, {cfg.seed, i, 0}, "estimate_St");
    samples[i] = phi(path.X()) * std::exp(-path.beta());
  });
  return summarize(samples);
}

BelEstimate estimate_DSt_bel(const DriftModel& model, const Observable& phi, const Vector& x,
                             const Vector& h, double t, const SimConfig& config) {
  require_positive_time(t, "estimate_DSt_bel");
  if (!(h.norm() > 0.0)) throw std::invalid_argument("estimate_DSt_bel: h must be nonzero");
  const SimConfig cfg = config.with_horizon(t);
  cfg.validate();
  const DriftModel stepping = stepping_model(model, cfg);
  const int steps = cfg.n_steps();
  const double horizon = steps * cfg.dt;
  std::vector<double> i1(cfg.n_paths), i2(cfg.n_paths), total(cfg.n_paths);
  parallel_for(i1.size(), [&](std::size_t i) {
    PathStepper path(stepping, model.params(), x, h, cfg.dt, {cfg.seed, i, 0}, true);
    double weighted_slope = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double s = k * cfg.dt;
      weighted_slope += (1.0 - s / horizon) * path.potential_slope_along_eta() * cfg.dt;
      path.step();
    }
    if (path.diverged()) throw_diverged("estimate_DSt_bel", i);
    const double weight = phi(path.X()) * std::exp(-path.beta());
    i1[i] = weight * path.ito() / horizon;
    i2[i] = -weight * weighted_slope;
    total[i] = i1[i] + i2[i];
  });
  return {summarize(i1), summarize(i2), summarize(total)};
}

namespace {

MCEstimate central_difference(const DriftModel& model, const Observable& phi, const Vector& x,
                              const Vector& h, double t, const SimConfig& config, double delta,
                              bool feynman_kac, const char* who) {
  require_positive_time(t, who);
  if (!(delta > 0.0)) throw std::invalid_argument(std::string(who) + ": delta must be > 0");
  const SimConfig cfg = config.with_horizon(t);
  cfg.validate();
  const DriftModel stepping = stepping_model(model, cfg);
  const int steps = cfg.n_steps();
  const Vector up = x + delta * h;
  const Vector down = x - delta * h;
  std::vector<double> samples(cfg.n_paths);
  parallel_for(samples.size(), [&](std::size_t i) {
    const rng::StreamId stream{cfg.seed, i, 0};
    const PathStepper plus = run_to_end(stepping, model.params(), up, steps, cfg.dt, stream, who);
    const PathStepper minus =
        run_to_end(stepping, model.params(), down, steps, cfg.dt, stream, who);
    double f_plus = phi(plus.X());
    double f_minus = phi(minus.X());
    if (feynman_kac) {
      f_plus *= std::exp(-plus.beta());
      f_minus *= std::exp(-minus.beta());
    }
    samples[i] = (f_plus - f_minus) / (2.0 * delta);
  });
  return summarize(samples);
}

}  // namespace

MCEstimate estimate_DPt_fd(const DriftModel& model, const Observable& phi, const Vector& x,
                           const Vector& h, double t, const SimConfig& config, double delta) {
  return central_difference(model, phi, x, h, t, config, delta, false, "estimate_DPt_fd");
}

MCEstimate estimate_DSt_fd(const DriftModel& model, const Observable& phi, const Vector& x,
                           const Vector& h, double t, const SimConfig& config, double delta) {
  return central_difference(model, phi, x, h, t, config, delta, true, "estimate_DSt_fd");
}

namespace {

IdentityReport finish_report(const std::vector<double>& lhs, const std::vector<double>& rhs,
                             double tolerance, double sigma) {
  std::vector<double> diff(lhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) diff[i] = lhs[i] - rhs[i];
  IdentityReport report;
  report.lhs = summarize(lhs);
  report.rhs = summarize(rhs);
  const MCEstimate d = summarize(diff);
  report.residual = d.value;
  report.std_error = d.std_error;
  report.tolerance = tolerance;
  report.bound = sigma * d.std_error + tolerance;
  report.pass = std::abs(d.value) <= report.bound;
  return report;
}

}  // namespace

IdentityReport check_voc_identity(const DriftModel& model, const Observable& phi, const Vector& x,
                                  double t, const SimConfig& config, const VocOptions& options) {
  require_positive_time(t, "check_voc_identity");
  if (options.n_quad < 4) throw std::invalid_argument("check_voc_identity: n_quad must be >= 4");
  if (options.n_inner < 0) throw std::invalid_argument("check_voc_identity: n_inner must be >= 0");
  const SimConfig cfg = config.with_horizon(t);
  cfg.validate();
  const DriftModel stepping = stepping_model(model, cfg);
  const int steps = cfg.n_steps();
  const Quadrature quad = trapezoid_on_grid(steps, options.n_quad, cfg.dt);
  const std::size_t n_nodes = quad.index.size();

  std::vector<double> lhs(cfg.n_paths), rhs(cfg.n_paths), defect(cfg.n_paths);
  parallel_for(lhs.size(), [&](std::size_t i) {
    PathStepper path(stepping, model.params(), x, Vector(), cfg.dt, {cfg.seed, i, 0}, false);
    std::vector<Vector> node_state(n_nodes);
    std::vector<double> node_weight(n_nodes);  // V(X_u) e^{-beta_u}
    std::size_t next = 0;
    for (int k = 0;; ++k) {
      if (next < n_nodes && quad.index[next] == k) {
        node_state[next] = path.X();
        node_weight[next] = path.potential() * std::exp(-path.beta());
        ++next;
      }
      if (k == steps) break;
      path.step();
    }
    if (path.diverged()) throw_diverged("check_voc_identity", i);
    const double f_end = phi(path.X());
    const double decay = std::exp(-path.beta());
    double integral = 0.0;
    double quad_of_weight = 0.0;
    for (std::size_t j = 0; j < n_nodes; ++j) {
      const int remaining = steps - quad.index[j];
      double inner;
      if (remaining == 0 || options.n_inner == 0) {
        inner = f_end;
      } else {
        double acc = 0.0;
        for (int m = 0; m < options.n_inner; ++m) {
          const rng::StreamId stream{cfg.seed, i * static_cast<std::uint64_t>(options.n_inner) + m,
                                     kVocInnerSubstream + j};
          const PathStepper inner_path = run_to_end(stepping, model.params(), node_state[j],
                                                    remaining, cfg.dt, stream, "check_voc_identity");
          acc += phi(inner_path.X());
        }
        inner = acc / options.n_inner;
      }
      integral += quad.weight[j] * node_weight[j] * inner;
      quad_of_weight += quad.weight[j] * node_weight[j];
    }
    lhs[i] = f_end;
    rhs[i] = f_end * decay + integral;
    defect[i] = std::abs(f_end) * std::abs(1.0 - decay - quad_of_weight);
  });
  double tolerance = 0.0;
  for (double v : defect) tolerance += v;
  tolerance /= static_cast<double>(defect.size());
  return finish_report(lhs, rhs, tolerance, options.sigma);
}

IdentityReport check_commutation_identity(const DriftModel& model, const TestFunction& phi,
                                          const Vector& x, const Vector& h, double t,
                                          const SimConfig& config,
                                          const CommutationOptions& options) {
  require_positive_time(t, "check_commutation_identity");
  if (!phi.grad) throw std::invalid_argument("check_commutation_identity: phi needs a gradient");
  if (options.n_quad < 4) throw std::invalid_argument("check_commutation_identity: n_quad must be >= 4");
  if (options.n_inner < 1) throw std::invalid_argument("check_commutation_identity: n_inner must be >= 1");
  const SimConfig cfg = config.with_horizon(t);
  cfg.validate();
  const DriftModel stepping = stepping_model(model, cfg);
  const int steps = cfg.n_steps();
  const Quadrature quad = trapezoid_on_grid(steps, options.n_quad, cfg.dt);
  const std::size_t n_nodes = quad.index.size();
  const double delta = options.delta > 0.0 ? options.delta : default_fd_step(x);
  const Vector up = x + delta * h;
  const Vector down = x - delta * h;
  const char* who = "check_commutation_identity";

  std::vector<double> lhs(cfg.n_paths), rhs(cfg.n_paths);
  parallel_for(lhs.size(), [&](std::size_t i) {
    const rng::StreamId stream{cfg.seed, i, 0};
    PathStepper path(stepping, model.params(), x, Vector(), cfg.dt, stream, false);
    std::vector<Vector> node_state(n_nodes);
    std::size_t next = 0;
    for (int k = 0;; ++k) {
      if (next < n_nodes && quad.index[next] == k) node_state[next++] = path.X();
      if (k == steps) break;
      path.step();
    }
    if (path.diverged()) throw_diverged(who, i);
    const double first = phi.grad(path.X()).dot(h);

    const PathStepper plus = run_to_end(stepping, model.params(), up, steps, cfg.dt, stream, who);
    const PathStepper minus = run_to_end(stepping, model.params(), down, steps, cfg.dt, stream, who);
    const double fd = (phi(plus.X()) - phi(minus.X())) / (2.0 * delta);

    // int_0^t P_u(<b' h, D P_{t-u} phi>)(x) du along this outer path.
    double integral = 0.0;
    for (std::size_t j = 0; j < n_nodes; ++j) {
      const Vector& y = node_state[j];
      const Vector direction = eval_jacobian(model, y) * h;
      const int remaining = steps - quad.index[j];
      double slope;
      if (remaining == 0) {
        slope = phi.grad(y).dot(direction);
      } else if (direction.norm() == 0.0) {
        slope = 0.0;
      } else {
        const double length = direction.norm();
        const Vector unit = direction / length;
        const double step = default_fd_step(y);
        const Vector y_up = y + step * unit;
        const Vector y_down = y - step * unit;
        double acc = 0.0;
        for (int m = 0; m < options.n_inner; ++m) {
          const rng::StreamId inner{cfg.seed, i * static_cast<std::uint64_t>(options.n_inner) + m,
                                    kCommutationInnerSubstream + j};
          const PathStepper a = run_to_end(stepping, model.params(), y_up, remaining, cfg.dt, inner, who);
          const PathStepper b = run_to_end(stepping, model.params(), y_down, remaining, cfg.dt, inner, who);
          acc += (phi(a.X()) - phi(b.X())) / (2.0 * step);
        }
        slope = length * acc / options.n_inner;
      }
      integral += quad.weight[j] * slope;
    }
    lhs[i] = first;
    rhs[i] = fd - integral;
  });
  return finish_report(lhs, rhs, options.allowance, options.sigma);
}

std::vector<double> log_time_grid(double t_min, double t_max, int n) {
  if (!(t_min > 0.0) || !(t_max > t_min) || n < 2) {
    throw std::invalid_argument("log_time_grid: need 0 < t_min < t_max and n >= 2");
  }
  std::vector<double> grid(n);
  const double ratio = std::log(t_max / t_min);
  for (int i = 0; i < n; ++i) grid[i] = t_max * std::exp(-ratio * i / (n - 1));
  return grid;
}

SmallTimeScan scan_small_t_singularity(const DriftModel& model, const Observable& phi,
                                       const Vector& x, const Vector& h,
                                       const std::vector<double>& t_grid, const SimConfig& config,
                                       double p) {
  if (t_grid.size() < 2) throw std::invalid_argument("scan_small_t_singularity: need >= 2 times");
  if (!(p >= 1.0)) throw std::invalid_argument("scan_small_t_singularity: p must be >= 1");
  const auto [lo, hi] = std::minmax_element(t_grid.begin(), t_grid.end());
  if (*hi < 10.0 * *lo * (1.0 - 1e-9)) {
    throw std::invalid_argument("scan_small_t_singularity: t grid must span a decade");
  }
  if (*lo < 10.0 * config.dt * (1.0 - 1e-9)) {
    throw std::invalid_argument("scan_small_t_singularity: all times must be >= 10 dt");
  }
  const int N = model.params().N;
  const double spatial = 1.0 + std::pow(x.norm(), 2 * N - 1);
  const Observable moment_fn = [&phi, p](const Vector& y) { return std::pow(std::abs(phi(y)), p); };

  SmallTimeScan scan;
  for (double t_requested : t_grid) {
    SmallTimePoint pt;
    pt.t = steps_for(t_requested, config.dt) * config.dt;
    pt.derivative = estimate_DSt_bel(model, phi, x, h, pt.t, config).total;
    pt.moment = estimate_Pt(model, moment_fn, x, pt.t, config);
    pt.envelope = (1.0 + 1.0 / std::sqrt(pt.t)) * spatial * std::pow(pt.moment.value, 1.0 / p);
    pt.ratio = pt.envelope > 0.0 ? std::abs(pt.derivative.value) / pt.envelope : 0.0;
    scan.max_ratio = std::max(scan.max_ratio, pt.ratio);
    if (std::abs(pt.derivative.value) < 2.0 * pt.derivative.std_error ||
        pt.derivative.value == 0.0) {
      scan.inconclusive = true;
    }
    scan.points.push_back(pt);
  }
  if (!scan.inconclusive) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(scan.points.size());
    for (const auto& pt : scan.points) {
      const double lx = std::log(pt.t);
      const double ly = std::log(std::abs(pt.derivative.value));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    scan.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return scan;
}

}  // namespace fomin
