#include "fomin/kde.hpp"

#include "fomin/parallel.hpp"
#include "kde_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fomin {
namespace {

// Below this retained kernel mass the truncated sum is not trusted.
constexpr double kMinWindowMass = 1e-8;

}  // namespace

std::string Bandwidth::describe() const {
  if (rule == Rule::silverman) return "silverman";
  std::ostringstream out;
  out << "fixed(" << value << ")";
  return out.str();
}

Vector silverman_bandwidth(const EmpiricalMeasure& measure) {
  const int d = measure.dim();
  const auto& w = measure.weights();
  const double n_eff = measure.effective_size();
  if (measure.size() < 2) {
    throw std::invalid_argument("kde_fit: degenerate sample spread (fewer than two points)");
  }
  Vector mean = Vector::Zero(d);
  for (std::size_t i = 0; i < measure.size(); ++i) {
    mean += w[i] * measure.samples().row(static_cast<Eigen::Index>(i)).transpose();
  }
  Vector var = Vector::Zero(d);
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const Vector dev = measure.samples().row(static_cast<Eigen::Index>(i)).transpose() - mean;
    var += w[i] * dev.cwiseProduct(dev);
  }
  var *= n_eff / (n_eff - 1.0);
  const double factor = std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) * std::pow(n_eff, -1.0 / (d + 4.0));
  Vector b(d);
  for (int h = 0; h < d; ++h) {
    const double sigma = std::sqrt(var[h]);
    if (!(sigma > 0.0)) {
      throw std::invalid_argument("kde_fit: degenerate sample spread in coordinate " +
                                  std::to_string(h + 1));
    }
    b[h] = factor * sigma;
  }
  return b;
}

KdeDensity::KdeDensity(const EmpiricalMeasure& source, Bandwidth rule)
    : dim_(source.dim()), source_(source.samples()), effective_size_(source.effective_size()) {
  if (rule.rule == Bandwidth::Rule::fixed) {
    if (!(rule.value > 0.0) || !std::isfinite(rule.value)) {
      throw std::invalid_argument("kde_fit: fixed bandwidth must be positive");
    }
    bandwidth_ = Vector::Constant(dim_, rule.value);
  } else {
    bandwidth_ = silverman_bandwidth(source);
  }
  inv_bandwidth_ = bandwidth_.cwiseInverse();
  log_norm_ = 0.5 * dim_ * std::log(2.0 * std::numbers::pi) + bandwidth_.array().log().sum();

  const std::size_t n = source.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return source_(static_cast<Eigen::Index>(a), 0) < source_(static_cast<Eigen::Index>(b), 0);
  });
  scaled_.assign(static_cast<std::size_t>(dim_), std::vector<double>(n));
  weights_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(order[k]);
    for (int h = 0; h < dim_; ++h) scaled_[h][k] = source_(i, h) * inv_bandwidth_[h];
    weights_[k] = source.weights()[order[k]];
  }
}

double KdeDensity::scaled_sums(const double* u, double* mean_offset) const {
  const auto& first = scaled_[0];
  const auto lo = std::lower_bound(first.begin(), first.end(), u[0] - kCutoff) - first.begin();
  const auto hi = std::upper_bound(first.begin(), first.end(), u[0] + kCutoff) - first.begin();
  std::vector<const double*> cols(static_cast<std::size_t>(dim_));
  for (int h = 0; h < dim_; ++h) cols[h] = scaled_[h].data();
  const double s = detail::kernel_sums(dim_, cols.data(), weights_.data(),
                                       static_cast<std::size_t>(lo), static_cast<std::size_t>(hi),
                                       u, 0.0, mean_offset);
  if (s < kMinWindowMass) return scaled_sums_full(u, mean_offset);
  for (int h = 0; h < dim_; ++h) mean_offset[h] /= s;
  return std::log(s);
}

double KdeDensity::scaled_sums_full(const double* u, double* mean_offset) const {
  // Shift the exponent so the dominant term is of order one.
  double shift = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (weights_[j] <= 0.0) continue;
    double r2 = 0.0;
    for (int h = 0; h < dim_; ++h) {
      const double diff = scaled_[h][j] - u[h];
      r2 += diff * diff;
    }
    shift = std::min(shift, 0.5 * r2 - std::log(weights_[j]));
  }
  std::vector<const double*> cols(static_cast<std::size_t>(dim_));
  for (int h = 0; h < dim_; ++h) cols[h] = scaled_[h].data();
  const double s =
      detail::kernel_sums(dim_, cols.data(), weights_.data(), 0, weights_.size(), u, shift, mean_offset);
  for (int h = 0; h < dim_; ++h) mean_offset[h] /= s;
  return std::log(s) - shift;
}

double KdeDensity::log_density(const Vector& x) const {
  if (x.size() != dim_) throw std::invalid_argument("KdeDensity: dimension mismatch");
  const Vector u = x.cwiseProduct(inv_bandwidth_);
  Vector offset(dim_);
  return scaled_sums(u.data(), offset.data()) - log_norm_;
}

double KdeDensity::density(const Vector& x) const { return std::exp(log_density(x)); }

Vector KdeDensity::grad_log_density(const Vector& x) const {
  if (x.size() != dim_) throw std::invalid_argument("KdeDensity: dimension mismatch");
  const Vector u = x.cwiseProduct(inv_bandwidth_);
  Vector offset(dim_);
  scaled_sums(u.data(), offset.data());
  return offset.cwiseProduct(inv_bandwidth_);
}

Matrix KdeDensity::grad_log_density_rows(const Matrix& points) const {
  if (points.cols() != dim_) throw std::invalid_argument("KdeDensity: dimension mismatch");
  Matrix out(points.rows(), dim_);
  const std::size_t n = static_cast<std::size_t>(points.rows());
  constexpr std::size_t kBlock = 64;
  parallel_for((n + kBlock - 1) / kBlock, [&](std::size_t block) {
    std::vector<double> u(static_cast<std::size_t>(dim_));
    std::vector<double> offset(static_cast<std::size_t>(dim_));
    const std::size_t end = std::min(n, (block + 1) * kBlock);
    for (std::size_t i = block * kBlock; i < end; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      for (int h = 0; h < dim_; ++h) u[h] = points(r, h) * inv_bandwidth_[h];
      scaled_sums(u.data(), offset.data());
      for (int h = 0; h < dim_; ++h) out(r, h) = offset[h] * inv_bandwidth_[h];
    }
  });
  return out;
}

bool KdeDensity::fitted_on(const Matrix& points) const {
  return points.rows() == source_.rows() && points.cols() == source_.cols() && points == source_;
}

}  // namespace fomin
