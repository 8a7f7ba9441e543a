#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace fomin::rng {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the output
/// depends only on the counter and the key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Identifies an independent random stream. Paths with the same identity see
/// the same numbers no matter which worker simulates them or in what order.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  /// Separates auxiliary streams (inner nested paths, etc.) from the main one.
  std::uint64_t substream = 0;
};

/// Counter-based standard normal generator for one stream. Also a uniform
/// random bit generator over 64-bit words.
class GaussianStream {
 public:
  using result_type = std::uint64_t;

  explicit GaussianStream(StreamId id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  double uniform();  // in [0, 1)
  double normal();
  void fill_normal(std::span<double> out);

  /// Index of the next Philox block; exposed for tests.
  std::uint64_t block_index() const { return block_; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t path_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;
};

/// Brownian increments dW_0..dW_{n_steps-1} for path `path_index`: i.i.d.
/// N(0, dt I_d), fully determined by (seed, path_index).
std::vector<Eigen::VectorXd> brownian_increments(std::uint64_t seed, std::uint64_t path_index,
                                                 int n_steps, double dt, int d);

}  // namespace fomin::rng
