#pragma once

#include <cstddef>
#include <span>

namespace fomin {

/// A Monte Carlo value with its standard error.
struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// Sample mean with SE = (sample std dev) / sqrt(n), two-pass.
MCEstimate summarize(std::span<const double> samples);

/// Mean of `samples` with a batch-means standard error: consecutive runs of
/// equal `group` labels form one batch. Used for correlated samples that come
/// in independent groups (one group per simulated path).
MCEstimate summarize_grouped(std::span<const double> samples, std::span<const int> groups);

/// SE of a difference of two independent estimates.
double combined_std_error(const MCEstimate& a, const MCEstimate& b);

}  // namespace fomin
