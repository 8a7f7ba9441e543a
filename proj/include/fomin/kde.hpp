#pragma once

#include "fomin/drift_models.hpp"
#include "fomin/invariant_measure.hpp"

#include <string>
#include <vector>

namespace fomin {

struct Bandwidth {
  enum class Rule { silverman, fixed };
  Rule rule = Rule::silverman;
  double value = 0.0;  // used by Rule::fixed, same for every coordinate

  static Bandwidth silverman() { return {}; }
  static Bandwidth fixed(double b) { return {Rule::fixed, b}; }
  std::string describe() const;
};

/// Gaussian kernel mixture rho_hat(x) = sum_j w_j prod_h N(x_h; y_jh, b_h^2)
/// over the points of an empirical measure, with a diagonal bandwidth.
///
/// Kernel sums are restricted to sources whose first coordinate lies within
/// kCutoff bandwidths of the query; the discarded mass is below
/// exp(-kCutoff^2 / 2) and evaluation falls back to a full log-sum-exp when the
/// retained sum is too small for that to be negligible.
class KdeDensity {
 public:
  static constexpr double kCutoff = 9.0;

  KdeDensity(const EmpiricalMeasure& source, Bandwidth rule = Bandwidth::silverman());

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  const Vector& bandwidth() const { return bandwidth_; }
  /// The fitted points in their original order.
  const Matrix& source() const { return source_; }
  double effective_size() const { return effective_size_; }

  double density(const Vector& x) const;
  double log_density(const Vector& x) const;
  Vector grad_log_density(const Vector& x) const;

  /// grad log rho_hat at every row of `points` (one row per point).
  Matrix grad_log_density_rows(const Matrix& points) const;

  /// True when `points` is exactly the sample matrix the density was fitted on.
  bool fitted_on(const Matrix& points) const;

 private:
  // Returns log of sum_j w_j exp(-|u - v_j|^2 / 2) and writes the weighted
  // mean of (v_j - u) into mean_offset, all in bandwidth-scaled coordinates.
  double scaled_sums(const double* u, double* mean_offset) const;
  double scaled_sums_full(const double* u, double* mean_offset) const;

  int dim_ = 0;
  Matrix source_;
  std::vector<std::vector<double>> scaled_;  // per coordinate, sorted by first
  std::vector<double> weights_;               // sorted alongside
  Vector bandwidth_;
  Vector inv_bandwidth_;
  double log_norm_ = 0.0;
  double effective_size_ = 0.0;
};

/// Per-coordinate bandwidth (4 / (d + 2))^{1 / (d + 4)} n^{-1 / (d + 4)} sigma_h
/// with n the effective sample size and sigma_h the weighted standard
/// deviation. Throws std::invalid_argument when some sigma_h is zero.
Vector silverman_bandwidth(const EmpiricalMeasure& measure);

}  // namespace fomin
