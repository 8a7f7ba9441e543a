#pragma once

#include "fomin/drift_models.hpp"
#include "fomin/mc_estimate.hpp"
#include "fomin/sde_engine.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fomin {

struct MeasureProvenance {
  enum class Kind { krylov_bogoliubov, long_run, imported, atoms };
  Kind kind = Kind::atoms;
  double horizon = 0.0;  // T for krylov_bogoliubov
  double burn_in = 0.0;  // long_run
  double thin = 0.0;     // long_run

  std::string describe() const;
};

/// Weighted point cloud approximating an invariant law or an occupation
/// average. One row of the sample matrix per point.
class EmpiricalMeasure {
 public:
  /// Weights are normalised to sum to one; `groups` (optional, one label per
  /// sample, contiguous) mark independent batches for standard errors.
  EmpiricalMeasure(Matrix samples, std::vector<double> weights, MeasureProvenance provenance,
                   std::vector<int> groups = {});

  static EmpiricalMeasure equal_weight(Matrix samples, MeasureProvenance provenance,
                                       std::vector<int> groups = {});

  std::size_t size() const { return static_cast<std::size_t>(samples_.rows()); }
  int dim() const { return static_cast<int>(samples_.cols()); }
  const Matrix& samples() const { return samples_; }
  Vector point(std::size_t i) const { return samples_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<int>& groups() const { return groups_; }
  const MeasureProvenance& provenance() const { return provenance_; }
  bool equal_weights() const { return equal_weights_; }
  /// Kish effective sample size 1 / sum w^2.
  double effective_size() const;

  /// Weighted mean of values[i] (one value per sample) with SE: batch means
  /// over groups when there are at least two, else the i.i.d. formula.
  MCEstimate mean_of(std::span<const double> values) const;
  MCEstimate mean(const std::function<double(const Vector&)>& f) const;

  /// Samples [begin, end) as a new equal-weight-preserving measure.
  EmpiricalMeasure slice(std::size_t begin, std::size_t end) const;

 private:
  Matrix samples_;
  std::vector<double> weights_;
  std::vector<int> groups_;
  MeasureProvenance provenance_;
  bool equal_weights_ = false;
};

/// Occupation measure over [0, T] of all paths: states X_0..X_{n-1} of every
/// path (left-endpoint Riemann sum of (1/T) int_0^T pi_{t,x} dt), equal weights.
EmpiricalMeasure sample_krylov_bogoliubov(const DriftModel& model, const Vector& x0, double T,
                                          const SimConfig& config);

/// n_samples states taken every `thin` time units after `burn_in`, spread over
/// config.n_paths independent paths (path i contributes a contiguous block).
EmpiricalMeasure sample_long_run(const DriftModel& model, const Vector& x0, double burn_in,
                                 std::size_t n_samples, double thin, const SimConfig& config);

/// A_1 = (2a + d) / omega, A_m = (2a + 2m - 2 + d) / (2 omega) A_{m-1}.
double moment_bound_constant(const HypothesisParams& params, int m);

struct MomentCheck {
  int m = 0;
  MCEstimate moment;  // int |x|^{2m} d nu_hat
  double bound = 0.0; // A_m
  bool pass = false;
};

std::vector<MomentCheck> check_moments(const EmpiricalMeasure& measure,
                                       const HypothesisParams& params, int m_max,
                                       double sigma = 4.0);

struct TailCheck {
  double t = 0.0;
  double r = 0.0;
  MCEstimate probability;  // P(|X(t, x0)| >= r)
  double bound = 0.0;      // (|x0|^2 + A_1) / r^2
  bool pass = false;
};

TailCheck check_tail_bound(const DriftModel& model, const Vector& x0, double t, double r,
                           const SimConfig& config, double sigma = 4.0);

/// Every (t, r) combination from one set of paths started at x0; t-major order.
std::vector<TailCheck> check_tail_bounds(const DriftModel& model, const Vector& x0,
                                         const std::vector<double>& times, const std::vector<double>& radii,
                                         const SimConfig& config, double sigma = 4.0);

struct TransientMomentPoint {
  double t = 0.0;
  int m = 0;
  MCEstimate moment;  // E |X(t, x)|^{2m}
  double bound = 0.0; // e^{-2 m omega t} |x|^{2m} + A_m
  bool pass = false;
};

/// E|X(t,x)|^{2m} <= e^{-2 m omega t}|x|^{2m} + A_m at the requested times.
std::vector<TransientMomentPoint> check_transient_moments(const DriftModel& model, const Vector& x0,
                                                          const std::vector<double>& times,
                                                          int m_max, const SimConfig& config,
                                                          double sigma = 4.0);

struct HalfComparison {
  std::string label;
  MCEstimate first;
  MCEstimate second;
  double z_score = 0.0;
  bool agree = false;
};

/// Compares battery means on the first and second halves of a long run
/// (samples sorted by time within each path). Flags |z| > threshold.
std::vector<HalfComparison> stationarity_diagnostic(
    const EmpiricalMeasure& measure,
    const std::vector<std::pair<std::string, std::function<double(const Vector&)>>>& battery,
    double threshold = 3.0);

struct InvarianceCheck {
  std::string label;
  MCEstimate before;  // mean of phi over nu_hat
  MCEstimate after;   // mean of P_delta phi over nu_hat (one inner step each)
  MCEstimate difference;
  bool pass = false;
};

/// |mean[P_delta phi] - mean[phi]| against sigma SE, one inner path of length
/// delta per sample (paired with phi at the same sample).
std::vector<InvarianceCheck> check_invariance(
    const DriftModel& model, const EmpiricalMeasure& measure,
    const std::vector<std::pair<std::string, std::function<double(const Vector&)>>>& battery,
    double delta, const SimConfig& config, double sigma = 4.0);

/// CSV with header weight,x_1..x_d.
void write_measure_csv(const EmpiricalMeasure& measure, std::ostream& out);
EmpiricalMeasure read_measure_csv(std::istream& in);

}  // namespace fomin
