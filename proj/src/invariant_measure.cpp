#include "fomin/invariant_measure.hpp"

#include "fomin/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace fomin {

std::string MeasureProvenance::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::krylov_bogoliubov:
      out << "krylov_bogoliubov(T=" << horizon << ")";
      break;
    case Kind::long_run:
      out << "long_run(burn_in=" << burn_in << ", thin=" << thin << ")";
      break;
    case Kind::imported:
      out << "imported";
      break;
    case Kind::atoms:
      out << "atoms";
      break;
  }
  return out.str();
}

EmpiricalMeasure::EmpiricalMeasure(Matrix samples, std::vector<double> weights,
                                   MeasureProvenance provenance, std::vector<int> groups)
    : samples_(std::move(samples)),
      weights_(std::move(weights)),
      groups_(std::move(groups)),
      provenance_(provenance) {
  const std::size_t n = static_cast<std::size_t>(samples_.rows());
  if (n == 0 || samples_.cols() == 0) throw std::invalid_argument("EmpiricalMeasure: empty");
  if (weights_.size() != n) throw std::invalid_argument("EmpiricalMeasure: weight count mismatch");
  if (!groups_.empty() && groups_.size() != n) {
    throw std::invalid_argument("EmpiricalMeasure: group count mismatch");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("EmpiricalMeasure: weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("EmpiricalMeasure: weights sum to zero");
  equal_weights_ = true;
  for (double& w : weights_) {
    w /= total;
    if (w != weights_.front()) equal_weights_ = false;
  }
  if (!groups_.empty()) {
    std::set<int> seen;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && groups_[i] == groups_[i - 1]) continue;
      if (!seen.insert(groups_[i]).second) {
        throw std::invalid_argument("EmpiricalMeasure: groups must be contiguous");
      }
    }
  }
}

EmpiricalMeasure EmpiricalMeasure::equal_weight(Matrix samples, MeasureProvenance provenance,
                                                std::vector<int> groups) {
  const auto n = static_cast<std::size_t>(samples.rows());
  return EmpiricalMeasure(std::move(samples), std::vector<double>(n, 1.0), provenance,
                          std::move(groups));
}

double EmpiricalMeasure::effective_size() const {
  double s = 0.0;
  for (double w : weights_) s += w * w;
  return 1.0 / s;
}

MCEstimate EmpiricalMeasure::mean_of(std::span<const double> values) const {
  const std::size_t n = size();
  if (values.size() != n) throw std::invalid_argument("EmpiricalMeasure::mean_of: size mismatch");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += weights_[i] * values[i];
  if (n == 1) return {mean, 0.0, 1};
  // Each group (or each sample when ungrouped) is one independent batch.
  double ss = 0.0;
  std::size_t n_batches = 0;
  double batch = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    batch += weights_[i] * (values[i] - mean);
    const bool batch_ends = groups_.empty() || i + 1 == n || groups_[i + 1] != groups_[i];
    if (batch_ends) {
      ss += batch * batch;
      batch = 0.0;
      ++n_batches;
    }
  }
  if (n_batches < 2) {
    // A single batch carries no between-batch information; fall back to i.i.d.
    ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = weights_[i] * (values[i] - mean);
      ss += dev * dev;
    }
    n_batches = n;
  }
  const double b = static_cast<double>(n_batches);
  return {mean, std::sqrt(ss * b / (b - 1.0)), n};
}

MCEstimate EmpiricalMeasure::mean(const std::function<double(const Vector&)>& f) const {
  std::vector<double> values(size());
  for (std::size_t i = 0; i < size(); ++i) values[i] = f(point(i));
  return mean_of(values);
}

EmpiricalMeasure EmpiricalMeasure::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > size()) throw std::invalid_argument("EmpiricalMeasure::slice: bad range");
  const auto b = static_cast<Eigen::Index>(begin);
  const auto len = static_cast<Eigen::Index>(end - begin);
  std::vector<double> w(weights_.begin() + b, weights_.begin() + b + len);
  std::vector<int> g;
  if (!groups_.empty()) g.assign(groups_.begin() + b, groups_.begin() + b + len);
  return EmpiricalMeasure(samples_.middleRows(b, len), std::move(w), provenance_, std::move(g));
}

EmpiricalMeasure sample_krylov_bogoliubov(const DriftModel& model, const Vector& x0, double T,
                                          const SimConfig& config) {
  if (!(T > 0.0)) throw std::invalid_argument("sample_krylov_bogoliubov: T must be > 0");
  const SimConfig cfg = config.with_horizon(T);
  cfg.validate();
  const DriftModel stepping = stepping_model(model, cfg);
  const int steps = cfg.n_steps();
  const int d = model.dim();
  const auto n_paths = static_cast<std::size_t>(cfg.n_paths);
  Matrix samples(static_cast<Eigen::Index>(n_paths) * steps, d);
  std::vector<int> groups(static_cast<std::size_t>(samples.rows()));
  parallel_for(n_paths, [&](std::size_t i) {
    PathStepper path(stepping, model.params(), x0, Vector(), cfg.dt, {cfg.seed, i, 0}, false);
    const auto base = static_cast<Eigen::Index>(i) * steps;
    for (int k = 0; k < steps; ++k) {
      samples.row(base + k) = path.X().transpose();
      groups[static_cast<std::size_t>(base + k)] = static_cast<int>(i);
      path.step();
    }
    if (path.diverged()) {
      throw DivergenceError("sample_krylov_bogoliubov: path " + std::to_string(i) + " diverged");
    }
  });
  MeasureProvenance prov{MeasureProvenance::Kind::krylov_bogoliubov, steps * cfg.dt, 0.0, 0.0};
  return EmpiricalMeasure::equal_weight(std::move(samples), prov, std::move(groups));
}

EmpiricalMeasure sample_long_run(const DriftModel& model, const Vector& x0, double burn_in,
                                 std::size_t n_samples, double thin, const SimConfig& config) {
  if (!(burn_in >= 0.0)) throw std::invalid_argument("sample_long_run: burn_in must be >= 0");
  if (!(thin > 0.0)) throw std::invalid_argument("sample_long_run: thin must be > 0");
  if (n_samples == 0) throw std::invalid_argument("sample_long_run: n_samples must be >= 1");
  if (config.n_paths < 1 || !(config.dt > 0.0)) {
    throw std::invalid_argument("sample_long_run: bad simulation config");
  }
  const DriftModel stepping = stepping_model(model, config);
  const int burn_steps = burn_in > 0.0 ? steps_for(burn_in, config.dt) : 0;
  const int thin_steps = steps_for(thin, config.dt);
  const auto n_paths = std::min<std::size_t>(static_cast<std::size_t>(config.n_paths), n_samples);
  const std::size_t per_path = n_samples / n_paths;
  const std::size_t extra = n_samples % n_paths;
  std::vector<std::size_t> offset(n_paths + 1, 0);
  for (std::size_t i = 0; i < n_paths; ++i) offset[i + 1] = offset[i] + per_path + (i < extra ? 1 : 0);

  const int d = model.dim();
  Matrix samples(static_cast<Eigen::Index>(n_samples), d);
  std::vector<int> groups(n_samples);
  parallel_for(n_paths, [&](std::size_t i) {
    PathStepper path(stepping, model.params(), x0, Vector(), config.dt, {config.seed, i, 0}, false);
    for (int k = 0; k < burn_steps; ++k) path.step();
    for (std::size_t s = offset[i]; s < offset[i + 1]; ++s) {
      if (s > offset[i]) {
        for (int k = 0; k < thin_steps; ++k) path.step();
      }
      if (path.diverged()) {
        throw DivergenceError("sample_long_run: path " + std::to_string(i) + " diverged");
      }
      samples.row(static_cast<Eigen::Index>(s)) = path.X().transpose();
      groups[s] = static_cast<int>(i);
    }
  });
  MeasureProvenance prov{MeasureProvenance::Kind::long_run, 0.0, burn_steps * config.dt,
                         thin_steps * config.dt};
  return EmpiricalMeasure::equal_weight(std::move(samples), prov, std::move(groups));
}

double moment_bound_constant(const HypothesisParams& params, int m) {
  if (m < 1) throw std::invalid_argument("moment_bound_constant: m must be >= 1");
  params.validate();
  double bound = (2.0 * params.a + params.d) / params.omega;
  for (int k = 2; k <= m; ++k) {
    bound *= (2.0 * params.a + 2.0 * k - 2.0 + params.d) / (2.0 * params.omega);
  }
  return bound;
}

std::vector<MomentCheck> check_moments(const EmpiricalMeasure& measure,
                                       const HypothesisParams& params, int m_max, double sigma) {
  if (m_max < 1) throw std::invalid_argument("check_moments: m_max must be >= 1");
  std::vector<double> r2(measure.size());
  for (std::size_t i = 0; i < measure.size(); ++i) {
    r2[i] = measure.samples().row(static_cast<Eigen::Index>(i)).squaredNorm();
  }
  std::vector<MomentCheck> checks;
  std::vector<double> power(measure.size(), 1.0);
  for (int m = 1; m <= m_max; ++m) {
    for (std::size_t i = 0; i < power.size(); ++i) power[i] *= r2[i];
    MomentCheck c;
    c.m = m;
    c.moment = measure.mean_of(power);
    c.bound = moment_bound_constant(params, m);
    c.pass = c.moment.value <= c.bound + sigma * c.moment.std_error;
    checks.push_back(c);
  }
  return checks;
}

std::vector<TailCheck> check_tail_bounds(const DriftModel& model, const Vector& x0,
                                         const std::vector<double>& times, const std::vector<double>& radii,
                                         const SimConfig& config, double sigma) {
  if (times.empty() || radii.empty()) throw std::invalid_argument("check_tail_bounds: empty grid");
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("check_tail_bound: r must be > 0");
  }
  std::vector<int> record;
  for (double t : times) {
    if (!(t > 0.0)) throw std::invalid_argument("check_tail_bound: t must be > 0");
    record.push_back(steps_for(t, config.dt));
  }
  config.validate();
  const int last = *std::max_element(record.begin(), record.end());
  const DriftModel stepping = stepping_model(model, config);
  const std::size_t n_times = times.size();
  // norm[i * n_times + j] = |X(t_j)| on path i
  std::vector<double> norm(static_cast<std::size_t>(config.n_paths) * n_times);
  parallel_for(static_cast<std::size_t>(config.n_paths), [&](std::size_t i) {
    PathStepper path(stepping, model.params(), x0, Vector(), config.dt, {config.seed, i, 0}, false);
    for (int k = 1; k <= last; ++k) {
      path.step();
      if (path.diverged()) {
        throw DivergenceError("check_tail_bound: path " + std::to_string(i) + " diverged");
      }
      for (std::size_t j = 0; j < n_times; ++j) {
        if (record[j] == k) norm[i * n_times + j] = path.X().norm();
      }
    }
  });
  const double n = static_cast<double>(config.n_paths);
  const double a1 = moment_bound_constant(model.params(), 1);
  std::vector<TailCheck> out;
  for (std::size_t j = 0; j < n_times; ++j) {
    for (double r : radii) {
      double count = 0.0;
      for (std::size_t i = 0; i < static_cast<std::size_t>(config.n_paths); ++i) {
        if (norm[i * n_times + j] >= r) count += 1.0;
      }
      const double p = count / n;
      TailCheck check;
      check.t = record[j] * config.dt;
      check.r = r;
      check.probability = {p, std::sqrt(p * (1.0 - p) / n), static_cast<std::size_t>(config.n_paths)};
      check.bound = (x0.squaredNorm() + a1) / (r * r);
      check.pass = p <= check.bound + sigma * check.probability.std_error;
      out.push_back(check);
    }
  }
  return out;
}

TailCheck check_tail_bound(const DriftModel& model, const Vector& x0, double t, double r,
                           const SimConfig& config, double sigma) {
  return check_tail_bounds(model, x0, {t}, {r}, config, sigma).front();
}

std::vector<TransientMomentPoint> check_transient_moments(const DriftModel& model, const Vector& x0,
                                                          const std::vector<double>& times,
                                                          int m_max, const SimConfig& config,
                                                          double sigma) {
  if (times.empty() || m_max < 1) throw std::invalid_argument("check_transient_moments: bad input");
  std::vector<int> record;
  for (double t : times) record.push_back(steps_for(t, config.dt));
  const int last = *std::max_element(record.begin(), record.end());
  const DriftModel stepping = stepping_model(model, config);
  const std::size_t n_times = times.size();
  // r2[i * n_times + j] = |X(t_j)|^2 on path i
  std::vector<double> r2(static_cast<std::size_t>(config.n_paths) * n_times);
  parallel_for(static_cast<std::size_t>(config.n_paths), [&](std::size_t i) {
    PathStepper path(stepping, model.params(), x0, Vector(), config.dt, {config.seed, i, 0}, false);
    for (int k = 0;; ++k) {
      for (std::size_t j = 0; j < n_times; ++j) {
        if (record[j] == k) r2[i * n_times + j] = path.X().squaredNorm();
      }
      if (k == last) break;
      path.step();
    }
    if (path.diverged()) {
      throw DivergenceError("check_transient_moments: path " + std::to_string(i) + " diverged");
    }
  });
  const HypothesisParams& p = model.params();
  std::vector<TransientMomentPoint> out;
  std::vector<double> values(static_cast<std::size_t>(config.n_paths));
  for (std::size_t j = 0; j < n_times; ++j) {
    for (int m = 1; m <= m_max; ++m) {
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::pow(r2[i * n_times + j], m);
      TransientMomentPoint pt;
      pt.t = record[j] * config.dt;
      pt.m = m;
      pt.moment = summarize(values);
      pt.bound = std::exp(-2.0 * m * p.omega * pt.t) * std::pow(x0.squaredNorm(), m) +
                 moment_bound_constant(p, m);
      pt.pass = pt.moment.value <= pt.bound + sigma * pt.moment.std_error;
      out.push_back(pt);
    }
  }
  return out;
}

std::vector<HalfComparison> stationarity_diagnostic(
    const EmpiricalMeasure& measure,
    const std::vector<std::pair<std::string, std::function<double(const Vector&)>>>& battery,
    double threshold) {
  // Split each group (or the whole list) at its midpoint.
  const std::size_t n = measure.size();
  std::vector<char> late(n, 0);
  std::size_t start = 0;
  const auto& groups = measure.groups();
  for (std::size_t i = 0; i < n; ++i) {
    const bool ends = groups.empty() ? i + 1 == n : (i + 1 == n || groups[i + 1] != groups[i]);
    if (ends) {
      const std::size_t len = i + 1 - start;
      for (std::size_t k = start + len / 2; k <= i; ++k) late[k] = 1;
      start = i + 1;
    }
  }
  std::vector<HalfComparison> out;
  for (const auto& [label, f] : battery) {
    std::vector<double> early_vals, late_vals;
    for (std::size_t i = 0; i < n; ++i) {
      (late[i] ? late_vals : early_vals).push_back(f(measure.point(i)));
    }
    HalfComparison c;
    c.label = label;
    if (early_vals.empty() || late_vals.empty()) {
      c.agree = true;
      out.push_back(c);
      continue;
    }
    c.first = summarize(early_vals);
    c.second = summarize(late_vals);
    const double se = combined_std_error(c.first, c.second);
    c.z_score = se > 0.0 ? (c.first.value - c.second.value) / se : 0.0;
    c.agree = std::abs(c.z_score) <= threshold;
    out.push_back(c);
  }
  return out;
}

std::vector<InvarianceCheck> check_invariance(
    const DriftModel& model, const EmpiricalMeasure& measure,
    const std::vector<std::pair<std::string, std::function<double(const Vector&)>>>& battery,
    double delta, const SimConfig& config, double sigma) {
  const SimConfig cfg = config.with_horizon(delta);
  const DriftModel stepping = stepping_model(model, cfg);
  const int steps = cfg.n_steps();
  const std::size_t n = measure.size();
  // One inner path per sample; the stream is keyed by the sample index.
  std::vector<Vector> moved(n);
  parallel_for(n, [&](std::size_t i) {
    PathStepper path(stepping, model.params(), measure.point(i), Vector(), cfg.dt,
                     {cfg.seed, i, 7}, false);
    for (int k = 0; k < steps; ++k) path.step();
    if (path.diverged()) {
      throw DivergenceError("check_invariance: inner path " + std::to_string(i) + " diverged");
    }
    moved[i] = path.X();
  });
  std::vector<InvarianceCheck> out;
  std::vector<double> before(n), after(n), diff(n);
  for (const auto& [label, f] : battery) {
    for (std::size_t i = 0; i < n; ++i) {
      before[i] = f(measure.point(i));
      after[i] = f(moved[i]);
      diff[i] = after[i] - before[i];
    }
    InvarianceCheck c;
    c.label = label;
    c.before = measure.mean_of(before);
    c.after = measure.mean_of(after);
    c.difference = measure.mean_of(diff);
    c.pass = std::abs(c.difference.value) <= sigma * c.difference.std_error;
    out.push_back(c);
  }
  return out;
}

void write_measure_csv(const EmpiricalMeasure& measure, std::ostream& out) {
  out << "weight";
  for (int j = 0; j < measure.dim(); ++j) out << ",x_" << j + 1;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < measure.size(); ++i) {
    out << measure.weights()[i];
    for (int j = 0; j < measure.dim(); ++j) {
      out << ',' << measure.samples()(static_cast<Eigen::Index>(i), j);
    }
    out << '\n';
  }
}

EmpiricalMeasure read_measure_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_measure_csv: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "weight") {
    throw std::runtime_error("read_measure_csv: header must be weight,x_1..x_d");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "x_" + std::to_string(j)) {
      throw std::runtime_error("read_measure_csv: unexpected column '" + header[j] + "'");
    }
  }
  const int d = static_cast<int>(header.size()) - 1;
  std::vector<double> weights;
  std::vector<double> flat;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      double v;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("read_measure_csv: bad number on line " + std::to_string(line_no));
      }
      if (col == 0) {
        weights.push_back(v);
      } else {
        flat.push_back(v);
      }
      ++col;
    }
    if (col != d + 1) {
      throw std::runtime_error("read_measure_csv: wrong column count on line " +
                               std::to_string(line_no));
    }
  }
  if (weights.empty()) throw std::runtime_error("read_measure_csv: no rows");
  Matrix samples(static_cast<Eigen::Index>(weights.size()), d);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    for (int j = 0; j < d; ++j) samples(static_cast<Eigen::Index>(i), j) = flat[i * d + j];
  }
  return EmpiricalMeasure(std::move(samples), std::move(weights),
                          {MeasureProvenance::Kind::imported, 0.0, 0.0, 0.0});
}

}  // namespace fomin
