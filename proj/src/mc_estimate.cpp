#include "fomin/mc_estimate.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fomin {

MCEstimate summarize(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("summarize: no samples");
  double sum = 0.0;
  for (double v : samples) sum += v;
  const double mean = sum / static_cast<double>(n);
  if (n == 1) return {mean, 0.0, 1};
  double ss = 0.0;
  double correction = 0.0;
  for (double v : samples) {
    const double dev = v - mean;
    ss += dev * dev;
    correction += dev;
  }
  // Corrected two-pass variance.
  const double var = (ss - correction * correction / static_cast<double>(n)) /
                     static_cast<double>(n - 1);
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n)), n};
}

MCEstimate summarize_grouped(std::span<const double> samples, std::span<const int> groups) {
  if (samples.size() != groups.size()) {
    throw std::invalid_argument("summarize_grouped: size mismatch");
  }
  if (samples.empty()) throw std::invalid_argument("summarize_grouped: no samples");
  std::vector<double> batch_sums;
  std::vector<double> batch_sizes;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i == 0 || groups[i] != groups[i - 1]) {
      batch_sums.push_back(0.0);
      batch_sizes.push_back(0.0);
    }
    batch_sums.back() += samples[i];
    batch_sizes.back() += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  double total = 0.0;
  for (double s : batch_sums) total += s;
  const double mean = total / n;
  const std::size_t n_batches = batch_sums.size();
  if (n_batches < 2) return summarize(samples);
  // Ratio-estimator variance for unequal batch sizes.
  const double mean_size = n / static_cast<double>(n_batches);
  double ss = 0.0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const double dev = batch_sums[b] - mean * batch_sizes[b];
    ss += dev * dev;
  }
  const double var_of_mean = ss / (static_cast<double>(n_batches) *
                                   static_cast<double>(n_batches - 1) * mean_size * mean_size);
  return {mean, std::sqrt(var_of_mean), samples.size()};
}

double combined_std_error(const MCEstimate& a, const MCEstimate& b) {
  return std::hypot(a.std_error, b.std_error);
}

}  // namespace fomin
