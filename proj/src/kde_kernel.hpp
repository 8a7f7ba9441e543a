#pragma once

#include <cstddef>

namespace fomin::detail {

/// sum_{j in [lo, hi)} w_j exp(shift - |v_j - u|^2 / 2); g[h] receives the same
/// sum weighted by (v_jh - u_h). cols[h] holds coordinate h of every v_j.
double kernel_sums(int d, const double* const* cols, const double* w, std::size_t lo,
                   std::size_t hi, const double* u, double shift, double* g);

}  // namespace fomin::detail
