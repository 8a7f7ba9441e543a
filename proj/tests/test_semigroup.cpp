#include "fomin/semigroup.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using fomin::SimConfig;
using fomin::Vector;

Vector v1(double x) { return Vector::Constant(1, x); }

SimConfig config(int n_paths, std::uint64_t seed, double dt = 1e-3) {
  SimConfig c;
  c.dt = dt;
  c.n_paths = n_paths;
  c.seed = seed;
  return c;
}

const fomin::Observable kSin = [](const Vector& x) { return std::sin(x[0]); };
const fomin::Observable kTanh = [](const Vector& x) { return std::tanh(x[0]); };

// Feynman-Kac oracle for a one-dimensional model on [-L, L].
oracle::Grid1d fk_oracle(const fomin::DriftModel& model, const fomin::Observable& phi, double t,
                         bool with_potential, double L) {
  const auto& p = model.params();
  return oracle::feynman_kac_pde(
      [&](double x) { return fomin::eval_drift(model, v1(x))[0]; },
      [&](double x) { return with_potential ? p.K * (1.0 + std::pow(x * x, p.N)) : 0.0; },
      [&](double x) { return phi(v1(x)); }, t, L);
}

TEST(Oracle, PdeReproducesOuClosedForms) {
  const auto ou = fomin::ou_model();
  const auto g = fk_oracle(ou, kSin, 1.0, false, 8.0);
  const auto law = oracle::ou_law(1.0, 1.0);
  EXPECT_NEAR(g.value(1.0), std::sin(law.mean) * std::exp(-0.5 * law.var), 1e-5);
  EXPECT_NEAR(g.value(1.0), 0.289720, 1e-5);
  EXPECT_NEAR(g.derivative(0.0), 0.296364, 1e-5);
}

TEST(EstimatePt, OuClosedForm) {
  const auto e = fomin::estimate_Pt(fomin::ou_model(), kSin, v1(1.0), 1.0, config(20000, 1));
  EXPECT_LT(std::abs(e.value - 0.289720), 4 * e.std_error + 1e-3);
  EXPECT_EQ(e.n_samples, 20000u);
}

TEST(EstimatePt, ConstantObservable) {
  const auto e = fomin::estimate_Pt(fomin::double_well_model(), [](const Vector&) { return 2.0; }, v1(0.3),
                                    0.5, config(100, 2));
  EXPECT_EQ(e.value, 2.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(EstimateDPtFd, OuAnchorAtOrigin) {
  const auto e = fomin::estimate_DPt_fd(fomin::ou_model(), kSin, v1(0.0), v1(1.0), 1.0, config(20000, 3),
                                        fomin::default_fd_step(v1(0.0)));
  EXPECT_LT(std::abs(e.value - 0.296364), 4 * e.std_error + 1e-3);
}

TEST(EstimateSt, MatchesPdeOracle) {
  for (const auto& model : {fomin::ou_model(), fomin::double_well_model()}) {
    const auto g = fk_oracle(model, kSin, 0.5, true, 5.0);
    const auto e = fomin::estimate_St(model, kSin, v1(0.5), 0.5, config(20000, 4));
    EXPECT_LT(std::abs(e.value - g.value(0.5)), 4 * e.std_error + 2e-3) << model.name();
  }
}

TEST(EstimateDStBel, MatchesPdeOracle) {
  for (const auto& model : {fomin::ou_model(), fomin::double_well_model()}) {
    for (const auto& phi : {kSin, kTanh}) {
      const auto g = fk_oracle(model, phi, 0.5, true, 5.0);
      const auto e = fomin::estimate_DSt_bel(model, phi, v1(0.5), v1(1.0), 0.5, config(20000, 5));
      EXPECT_LT(std::abs(e.total.value - g.derivative(0.5)), 4 * e.total.std_error + 3e-3)
          << model.name() << " oracle " << g.derivative(0.5);
      EXPECT_NEAR(e.total.value, e.i1.value + e.i2.value, 1e-12);
    }
  }
}

TEST(EstimateDStBel, AgreesWithFiniteDifferencesInTwoDimensions) {
  const auto model = fomin::rotated_model();
  const Vector x = (Vector(2) << 0.5, -0.2).finished();
  const Vector h = (Vector(2) << 0.6, 0.8).finished();
  const fomin::Observable phi = [](const Vector& y) { return std::sin(y[0] + 0.5 * y[1]); };
  const auto bel = fomin::estimate_DSt_bel(model, phi, x, h, 0.5, config(10000, 6));
  const auto fd = fomin::estimate_DSt_fd(model, phi, x, h, 0.5, config(10000, 6), fomin::default_fd_step(x));
  EXPECT_LT(std::abs(bel.total.value - fd.value), 4 * fomin::combined_std_error(bel.total, fd));
}

TEST(EstimateDStBel, LinearInDirection) {
  const auto model = fomin::ou_model();
  const auto a = fomin::estimate_DSt_bel(model, kSin, v1(0.2), v1(1.0), 0.25, config(500, 7));
  const auto b = fomin::estimate_DSt_bel(model, kSin, v1(0.2), v1(-2.5), 0.25, config(500, 7));
  EXPECT_NEAR(b.total.value, -2.5 * a.total.value, 1e-12);
}

TEST(EstimateDStBel, RejectsZeroDirectionAndTime) {
  const auto model = fomin::ou_model();
  EXPECT_THROW(fomin::estimate_DSt_bel(model, kSin, v1(0.0), v1(0.0), 0.5, config(10, 1)),
               std::invalid_argument);
  EXPECT_THROW(fomin::estimate_DSt_bel(model, kSin, v1(0.0), v1(1.0), 0.0, config(10, 1)),
               std::invalid_argument);
}

TEST(Estimators, DivergenceIsReported) {
  auto c = config(4, 1, 0.5);
  c.scheme = fomin::Scheme::euler_maruyama;
  EXPECT_THROW(fomin::estimate_Pt(fomin::double_well_model(), kSin, v1(10.0), 20.0, c), fomin::DivergenceError);
}

TEST(VocIdentity, HoldsForOuAndDoubleWell) {
  for (const auto& model : {fomin::ou_model(), fomin::double_well_model()}) {
    const auto r = fomin::check_voc_identity(model, kSin, v1(0.5), 0.5, config(1000, 8), {16, 4});
    EXPECT_TRUE(r.pass) << model.name() << " residual " << r.residual << " bound " << r.bound;
    EXPECT_GT(r.std_error, 0.0);
    EXPECT_NEAR(r.lhs.value, fomin::estimate_Pt(model, kSin, v1(0.5), 0.5, config(1000, 8)).value, 1e-12);
  }
}

TEST(VocIdentity, OuterEndpointVariant) {
  const auto r = fomin::check_voc_identity(fomin::ou_model(), kSin, v1(0.5), 0.5, config(2000, 9), {16, 0});
  EXPECT_TRUE(r.pass) << r.residual << " bound " << r.bound;
  EXPECT_LT(r.tolerance, 0.01);
}

TEST(VocIdentity, CoarseQuadratureWidensTolerance) {
  const auto ou = fomin::ou_model();
  const auto fine = fomin::check_voc_identity(ou, kSin, v1(0.5), 0.5, config(500, 9), {16, 0});
  const auto coarse = fomin::check_voc_identity(ou, kSin, v1(0.5), 0.5, config(500, 9), {4, 0});
  EXPECT_GT(coarse.tolerance, fine.tolerance);
  EXPECT_TRUE(coarse.pass);
}

TEST(CommutationIdentity, HoldsForOu) {
  const auto sin1 = fomin::battery_function("sin_1_e1", 1);
  const auto r = fomin::check_commutation_identity(fomin::ou_model(), sin1, v1(0.5), v1(1.0), 0.5,
                                                   config(500, 10), {16, 4});
  EXPECT_TRUE(r.pass) << r.residual << " +- " << r.std_error;
  // P_t cos at 0.5 for OU.
  const auto law = oracle::ou_law(0.5, 0.5);
  EXPECT_LT(std::abs(r.lhs.value - std::cos(law.mean) * std::exp(-0.5 * law.var)), 4 * r.lhs.std_error + 1e-3);
}

TEST(LogTimeGrid, EndpointsAndOrder) {
  const auto g = fomin::log_time_grid(0.05, 1.0, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 1.0);
  EXPECT_NEAR(g.back(), 0.05, 1e-15);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i], g[i - 1]);
  EXPECT_THROW(fomin::log_time_grid(1.0, 0.5, 3), std::invalid_argument);
}

TEST(SmallTimeScan, EnvelopeRatioIsBounded) {
  const auto scan = fomin::scan_small_t_singularity(fomin::ou_model(), kSin, v1(0.5), v1(1.0),
                                                    fomin::log_time_grid(0.05, 1.0, 4), config(4000, 11));
  ASSERT_EQ(scan.points.size(), 4u);
  for (const auto& pt : scan.points) {
    EXPECT_GT(pt.envelope, 0.0);
    EXPECT_LT(pt.ratio, 1.0);
  }
  EXPECT_GT(scan.max_ratio, 0.0);
  EXPECT_FALSE(scan.inconclusive);
}

TEST(SmallTimeScan, RejectsShortGrids) {
  const auto model = fomin::ou_model();
  EXPECT_THROW(fomin::scan_small_t_singularity(model, kSin, v1(0.0), v1(1.0), {0.5, 1.0}, config(10, 1)),
               std::invalid_argument);
  EXPECT_THROW(fomin::scan_small_t_singularity(model, kSin, v1(0.0), v1(1.0), {0.005, 0.1}, config(10, 1)),
               std::invalid_argument);
}

}  // namespace
