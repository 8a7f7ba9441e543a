// Compiled with -ffast-math so the exp in the loops maps onto the vector math
// library; nothing here inspects NaN or infinity. The public entry point is
// cloned per instruction set and dispatched at load time.
#include "kde_kernel.hpp"

#include <cmath>
#include <vector>

namespace fomin::detail {
namespace {

template <int D>
inline __attribute__((always_inline)) double fixed_dim(const double* const* cols, const double* w, std::size_t lo, std::size_t hi,
                 const double* u, double shift, double* g) {
  const double* c0 = cols[0];
  const double* c1 = D > 1 ? cols[1] : cols[0];
  const double* c2 = D > 2 ? cols[2] : cols[0];
  const double u0 = u[0];
  const double u1 = D > 1 ? u[1] : 0.0;
  const double u2 = D > 2 ? u[2] : 0.0;
  double s = 0.0, g0 = 0.0, g1 = 0.0, g2 = 0.0;
#pragma omp simd reduction(+ : s, g0, g1, g2)
  for (std::size_t j = lo; j < hi; ++j) {
    const double d0 = c0[j] - u0;
    double r2 = d0 * d0;
    double d1 = 0.0, d2 = 0.0;
    if constexpr (D > 1) {
      d1 = c1[j] - u1;
      r2 += d1 * d1;
    }
    if constexpr (D > 2) {
      d2 = c2[j] - u2;
      r2 += d2 * d2;
    }
    const double k = w[j] * std::exp(shift - 0.5 * r2);
    s += k;
    g0 += k * d0;
    g1 += k * d1;
    g2 += k * d2;
  }
  g[0] = g0;
  if constexpr (D > 1) g[1] = g1;
  if constexpr (D > 2) g[2] = g2;
  return s;
}

inline __attribute__((always_inline)) double any_dim(int d, const double* const* cols, const double* w, std::size_t lo, std::size_t hi,
               const double* u, double shift, double* g) {
  std::vector<double> diff(static_cast<std::size_t>(d));
  for (int h = 0; h < d; ++h) g[h] = 0.0;
  double s = 0.0;
  for (std::size_t j = lo; j < hi; ++j) {
    double r2 = 0.0;
    for (int h = 0; h < d; ++h) {
      diff[h] = cols[h][j] - u[h];
      r2 += diff[h] * diff[h];
    }
    const double k = w[j] * std::exp(shift - 0.5 * r2);
    s += k;
    for (int h = 0; h < d; ++h) g[h] += k * diff[h];
  }
  return s;
}

}  // namespace

__attribute__((target_clones("avx512f", "avx2", "default")))
double kernel_sums(int d, const double* const* cols, const double* w, std::size_t lo,
                   std::size_t hi, const double* u, double shift, double* g) {
  switch (d) {
    case 1:
      return fixed_dim<1>(cols, w, lo, hi, u, shift, g);
    case 2:
      return fixed_dim<2>(cols, w, lo, hi, u, shift, g);
    case 3:
      return fixed_dim<3>(cols, w, lo, hi, u, shift, g);
    default:
      return any_dim(d, cols, w, lo, hi, u, shift, g);
  }
}

}  // namespace fomin::detail
