#include "fomin/mc_estimate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace {

using fomin::MCEstimate;

TEST(Summarize, MeanAndStandardError) {
  const std::vector<double> v{1, 2, 3, 4};
  const MCEstimate e = fomin::summarize(v);
  EXPECT_DOUBLE_EQ(e.value, 2.5);
  EXPECT_NEAR(e.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(e.n_samples, 4u);
}

TEST(Summarize, SingleSampleHasZeroError) {
  const std::vector<double> v{3.5};
  const MCEstimate e = fomin::summarize(v);
  EXPECT_EQ(e.value, 3.5);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(Summarize, LargeOffsetDoesNotLosePrecision) {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(1e9 + (i % 2 ? 1.0 : -1.0));
  EXPECT_NEAR(fomin::summarize(v).std_error, std::sqrt(1000.0 / 999.0) / std::sqrt(1000.0), 1e-9);
}

TEST(SummarizeGrouped, BatchMeans) {
  // Three batches of two; batch means 1, 2, 6.
  const std::vector<double> v{0, 2, 1, 3, 5, 7};
  const std::vector<int> g{0, 0, 1, 1, 2, 2};
  const MCEstimate e = fomin::summarize_grouped(v, g);
  EXPECT_DOUBLE_EQ(e.value, 3.0);
  // sd of {1, 2, 6} is sqrt(7), over sqrt(3) batches.
  EXPECT_NEAR(e.std_error, std::sqrt(7.0 / 3.0), 1e-12);
}

TEST(CombinedStdError, Hypot) {
  EXPECT_DOUBLE_EQ(fomin::combined_std_error({0, 3, 1}, {0, 4, 1}), 5.0);
}

}  // namespace
