#include "fomin/rng.hpp"
#include "fomin/drift_models.hpp"
#include "fomin/sde_engine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace {

using fomin::rng::GaussianStream;
using fomin::rng::philox4x32;
using Block = std::array<std::uint32_t, 4>;

TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(GaussianStream, SameIdentitySameNumbers) {
  GaussianStream a({42, 7, 0});
  GaussianStream b({42, 7, 0});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(GaussianStream, DistinctIdentitiesDiffer) {
  std::set<double> firsts;
  for (std::uint64_t path = 0; path < 50; ++path) {
    for (std::uint64_t sub = 0; sub < 3; ++sub) firsts.insert(GaussianStream({1, path, sub}).normal());
  }
  firsts.insert(GaussianStream({2, 0, 0}).normal());
  EXPECT_EQ(firsts.size(), 151u);
}

TEST(GaussianStream, UniformRange) {
  GaussianStream s({3, 0, 0});
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(GaussianStream, NormalMoments) {
  GaussianStream s({11, 0, 0});
  const int n = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_LT(std::abs(m1), 4.0 / std::sqrt(n));
  EXPECT_LT(std::abs(m2 - 1.0), 4.0 * std::sqrt(2.0 / n));
  EXPECT_LT(std::abs(m4 - 3.0), 4.0 * std::sqrt(96.0 / n));
}

TEST(GaussianStream, FillMatchesSequentialDraws) {
  GaussianStream a({5, 1, 2});
  GaussianStream b({5, 1, 2});
  std::vector<double> buf(17);
  a.fill_normal(buf);
  for (double v : buf) EXPECT_EQ(v, b.normal());
}

TEST(BrownianIncrements, MatchPathStepperIncrements) {
  const auto model = fomin::rotated_model();
  const double dt = 0.01;
  const auto inc = fomin::rng::brownian_increments(9, 4, 25, dt, 2);
  ASSERT_EQ(inc.size(), 25u);
  fomin::PathStepper path(model, model.params(), fomin::Vector::Zero(2), fomin::Vector::Unit(2, 0),
                          dt, {9, 4, 0});
  for (int k = 0; k < 25; ++k) {
    path.step();
    EXPECT_EQ(path.last_increment(), inc[static_cast<std::size_t>(k)]);
  }
}

}  // namespace
