#include "fomin/rng.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <stdexcept>

namespace fomin::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

GaussianStream::GaussianStream(StreamId id) : path_(id.path) {
  // The substream is folded into the key so that auxiliary streams never
  // share counters with the primary stream of any path.
  const std::uint64_t k = splitmix64(id.seed ^ splitmix64(id.substream));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void GaussianStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)};
  buffer_ = philox4x32(ctr, key_);
  ++block_;
  buffer_pos_ = 0;
}

GaussianStream::result_type GaussianStream::operator()() {
  if (buffer_pos_ > 2) refill();
  const std::uint64_t hi = buffer_[buffer_pos_++];
  const std::uint64_t lo = buffer_[buffer_pos_++];
  return (hi << 32) | lo;
}

double GaussianStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double GaussianStream::normal() {
  // Ziggurat sampler; consumes a variable number of 64-bit words.
  return boost::random::normal_distribution<double>()(*this);
}

void GaussianStream::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

std::vector<Eigen::VectorXd> brownian_increments(std::uint64_t seed, std::uint64_t path_index,
                                                 int n_steps, double dt, int d) {
  if (n_steps < 1) throw std::invalid_argument("brownian_increments: n_steps must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("brownian_increments: dt must be positive");
  if (d < 1) throw std::invalid_argument("brownian_increments: d must be >= 1");
  GaussianStream stream({seed, path_index, 0});
  const double scale = std::sqrt(dt);
  std::vector<Eigen::VectorXd> increments(n_steps, Eigen::VectorXd(d));
  for (auto& dw : increments) {
    for (int j = 0; j < d; ++j) dw[j] = scale * stream.normal();
  }
  return increments;
}

}  // namespace fomin::rng
