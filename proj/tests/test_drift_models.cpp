#include "fomin/drift_models.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace {

using fomin::Matrix;
using fomin::Vector;

Vector v1(double x) { return Vector::Constant(1, x); }
Vector v2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

TEST(EvalDrift, BuiltinValues) {
  EXPECT_DOUBLE_EQ(fomin::eval_drift(fomin::ou_model(), v1(1.5))[0], -1.5);
  EXPECT_DOUBLE_EQ(fomin::eval_drift(fomin::double_well_model(), v1(2.0))[0], -6.0);
  EXPECT_EQ(fomin::eval_drift(fomin::rotated_model(), v2(1, 0)), v2(-1, 1));
}

TEST(EvalDrift, RejectsNonFiniteInput) {
  EXPECT_THROW(fomin::eval_drift(fomin::ou_model(), v1(std::nan(""))), std::invalid_argument);
}

TEST(EvalDrift, NonFiniteOutputIsAnError) {
  fomin::DriftModel bad(
      "bad", {1, 0, 1, 1, 1},
      [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out[0] = 1.0 / (x[0] - x[0]); },
      [](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) {
        out(0, 0) = std::numeric_limits<double>::infinity();
      });
  EXPECT_THROW(fomin::eval_drift(bad, v1(1.0)), fomin::ModelEvaluationError);
  EXPECT_THROW(fomin::eval_jacobian(bad, v1(1.0)), fomin::ModelEvaluationError);
}

TEST(EvalJacobian, BuiltinValues) {
  EXPECT_DOUBLE_EQ(fomin::eval_jacobian(fomin::ou_model(), v1(3.0))(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(fomin::eval_jacobian(fomin::double_well_model(), v1(1.0))(0, 0), -2.0);
  Matrix expected(2, 2);
  expected << -1, -1, 1, -1;
  EXPECT_EQ(fomin::eval_jacobian(fomin::rotated_model(), v2(0.3, -2)), expected);
}

TEST(EvalJacobian, MatchesCentralDifferences) {
  const double delta = 1e-4;
  for (const auto& name : fomin::builtin_model_names()) {
    const auto model = fomin::builtin_model(name);
    for (const Vector& x : fomin::radial_grid(model.dim(), 3.0, 200)) {
      const Matrix J = fomin::eval_jacobian(model, x);
      for (int j = 0; j < model.dim(); ++j) {
        const Vector e = Vector::Unit(model.dim(), j);
        const Vector fd = (fomin::eval_drift(model, x + delta * e) - fomin::eval_drift(model, x - delta * e)) /
                          (2.0 * delta);
        EXPECT_LT((fd - J.col(j)).norm(), 1e-6 * (1.0 + J.col(j).norm())) << name;
      }
    }
  }
}

TEST(CheckHypothesis, OuCertificateIsTight) {
  const auto report = fomin::check_hypothesis(fomin::ou_model(), fomin::radial_grid(1), 1e-12);
  EXPECT_TRUE(report.pass);
  EXPECT_NEAR(report.dissipativity_slack, 0.0, 1e-12);
}

TEST(CheckHypothesis, DoubleWellSlackVanishesOnUnitSphere) {
  const auto report = fomin::check_hypothesis(fomin::double_well_model(), fomin::radial_grid(1, 5.0), 1e-12);
  EXPECT_TRUE(report.pass);
  // a - max(2x^2 - x^4) = 1 - 1, attained at |x| = 1.
  EXPECT_NEAR(report.dissipativity_slack, 0.0, 1e-12);
  EXPECT_NEAR(std::abs(report.dissipativity_worst_point[0]), 1.0, 1e-12);
}

TEST(CheckHypothesis, CubicDriftNeedsQuarticGrowthExponent) {
  auto p = fomin::double_well_model().params();
  p.N = 1;
  const auto report = fomin::check_hypothesis(fomin::double_well_model().with_params(p),
                                              fomin::radial_grid(1, 5.0), 1e-9);
  EXPECT_TRUE(report.dissipativity_pass);
  EXPECT_FALSE(report.growth_pass);
}

TEST(CheckHypothesis, WrongGrowthConstantFails) {
  const auto model = fomin::builtin_model("ou", {.K = 1.0});
  const std::vector<Vector> grid{v1(0.5)};
  const auto report = fomin::check_hypothesis(model, grid, 1e-12);
  EXPECT_FALSE(report.growth_pass);
  EXPECT_NEAR(report.growth_slack, 1.25 - 1.5, 1e-12);
}

TEST(CheckHypothesis, WrongRateFailsDissipativity) {
  const auto model = fomin::builtin_model("ou", {.omega = 2.0});
  const auto report = fomin::check_hypothesis(model, fomin::radial_grid(1), 1e-9);
  EXPECT_FALSE(report.dissipativity_pass);
  EXPECT_FALSE(report.pass);
}

TEST(CheckHypothesis, AllBuiltinsPassOnDefaultGrid) {
  for (const auto& name : fomin::builtin_model_names()) {
    const auto model = fomin::builtin_model(name);
    const auto grid = fomin::radial_grid(model.dim());
    EXPECT_GE(grid.size(), 10000u);
    const auto report = fomin::check_hypothesis(model, grid, 1e-9);
    EXPECT_TRUE(report.pass) << name;
    EXPECT_GE(report.dissipativity_slack, -1e-9) << name;
    EXPECT_GE(report.growth_slack, -1e-9) << name;
  }
}

TEST(RadialGrid, ReachesRadiusAndContainsOrigin) {
  for (int d : {1, 2, 3}) {
    const auto grid = fomin::radial_grid(d, 10.0, 2000);
    double max_norm = 0.0, min_norm = 1e9;
    for (const auto& x : grid) {
      max_norm = std::max(max_norm, x.norm());
      min_norm = std::min(min_norm, x.norm());
    }
    EXPECT_NEAR(max_norm, 10.0, 1e-12);
    EXPECT_EQ(min_norm, 0.0);
  }
}

TEST(PotentialV, Values) {
  const auto ou = fomin::ou_model();
  EXPECT_DOUBLE_EQ(fomin::potential_V(ou, v1(0.0)), 2.0);
  EXPECT_DOUBLE_EQ(fomin::potential_V(ou, v1(3.0)), 20.0);
  const auto dw = fomin::double_well_model();
  EXPECT_DOUBLE_EQ(fomin::potential_V(dw, v1(0.0)), dw.params().K);
  // K (1 + |x|^4) in two dimensions: |(1,1)|^4 = 4.
  const auto p = fomin::HypothesisParams{1, 0, 3, 2, 2};
  EXPECT_DOUBLE_EQ(fomin::potential_V(p, v2(1, 1)), 15.0);
}

TEST(PotentialGradient, MatchesCentralDifferences) {
  const fomin::HypothesisParams p{1, 0, 1.5, 3, 2};
  const Vector x = v2(0.7, -1.1);
  const Vector g = fomin::potential_gradient(p, x);
  for (int j = 0; j < 2; ++j) {
    const Vector e = 1e-5 * Vector::Unit(2, j);
    const double fd = (fomin::potential_V(p, x + e) - fomin::potential_V(p, x - e)) / 2e-5;
    EXPECT_NEAR(g[j], fd, 1e-6 * std::abs(fd));
  }
}

TEST(TameDrift, LeavesOuUnchanged) {
  const auto ou = fomin::ou_model();
  for (int n : {1, 10, 1000}) {
    const auto tamed = fomin::tame_drift(ou, n);
    for (double x : {-7.0, -1.0, 0.0, 0.3, 5.0}) {
      EXPECT_NEAR(fomin::eval_drift(tamed, v1(x))[0], -x, 1e-15);
    }
  }
}

TEST(TameDrift, DoubleWellWithQuadraticCertificate) {
  auto p = fomin::double_well_model().params();
  p.N = 1;
  const auto tamed = fomin::tame_drift(fomin::double_well_model().with_params(p), 1);
  EXPECT_NEAR(fomin::eval_drift(tamed, v1(2.0))[0], -4.0 / 17.0 - 2.0, 1e-14);
  EXPECT_NEAR(fomin::eval_drift(tamed, v1(2.0))[0], -2.23529, 1e-5);
}

TEST(TameDrift, DoubleWellWithShippedCertificate) {
  const auto tamed = fomin::tame_drift(fomin::double_well_model(), 1);
  // N = 2: denominator 1 + 2^6.
  EXPECT_NEAR(fomin::eval_drift(tamed, v1(2.0))[0], -4.0 / 65.0 - 2.0, 1e-14);
}

TEST(TameDrift, OriginUnchanged) {
  for (const auto& name : fomin::builtin_model_names()) {
    const auto model = fomin::builtin_model(name);
    const Vector zero = Vector::Zero(model.dim());
    EXPECT_EQ(fomin::eval_drift(fomin::tame_drift(model, 3), zero), fomin::eval_drift(model, zero));
  }
}

TEST(TameDrift, PreservesDissipativity) {
  for (const auto& name : fomin::builtin_model_names()) {
    const auto model = fomin::builtin_model(name);
    const auto& p = model.params();
    for (int n : {1, 4, 100, 10000}) {
      const auto tamed = fomin::tame_drift(model, n);
      for (const Vector& x : fomin::radial_grid(model.dim(), 10.0, 2000)) {
        const double lhs = fomin::eval_drift(tamed, x).dot(x) + p.omega * x.squaredNorm() - p.a;
        ASSERT_LE(lhs, 1e-9 * (1.0 + x.squaredNorm())) << name << " n=" << n;
      }
    }
  }
}

TEST(TameDrift, ConvergesMonotonically) {
  const auto model = fomin::double_well_model();
  for (double x : {-3.0, -1.2, 0.4, 1.0, 2.5}) {
    const double b = fomin::eval_drift(model, v1(x))[0];
    double prev = std::numeric_limits<double>::infinity();
    for (int n : {1, 10, 100, 1000, 10000, 100000}) {
      const double err = std::abs(fomin::eval_drift(fomin::tame_drift(model, n), v1(x))[0] - b);
      EXPECT_LE(err, prev);
      prev = err;
    }
    EXPECT_LT(prev, 1e-2 * (1.0 + std::abs(b)));
  }
}

TEST(TameDrift, GrowsAtMostLinearly) {
  const auto tamed = fomin::tame_drift(fomin::double_well_model(), 100);
  for (double x : {10.0, 100.0, 1e4}) {
    EXPECT_LT(std::abs(fomin::eval_drift(tamed, v1(x))[0]), 2.0 * x);
  }
}

TEST(TameDrift, JacobianMatchesCentralDifferences) {
  for (const auto& name : fomin::builtin_model_names()) {
    const auto tamed = fomin::tame_drift(fomin::builtin_model(name), 5);
    for (const Vector& x : fomin::radial_grid(tamed.dim(), 4.0, 100)) {
      const Matrix J = fomin::eval_jacobian(tamed, x);
      for (int j = 0; j < tamed.dim(); ++j) {
        const Vector e = 1e-5 * Vector::Unit(tamed.dim(), j);
        const Vector fd = (fomin::eval_drift(tamed, x + e) - fomin::eval_drift(tamed, x - e)) / 2e-5;
        EXPECT_LT((fd - J.col(j)).norm(), 1e-5 * (1.0 + J.col(j).norm())) << name;
      }
    }
  }
}

TEST(BuiltinModel, LookupAndErrors) {
  EXPECT_EQ(fomin::builtin_model("ou", {.d = 3}).dim(), 3);
  EXPECT_THROW(fomin::builtin_model("nope"), std::invalid_argument);
  EXPECT_THROW(fomin::builtin_model("rotated", {.d = 3}), std::invalid_argument);
  EXPECT_THROW(fomin::builtin_model("ou", {.omega = -1.0}), std::invalid_argument);
}

TEST(OracleExpectation, DoubleWellAgainstSimpson) {
  const auto model = fomin::double_well_model();
  auto log_rho = [](double x) { return x * x - 0.5 * x * x * x * x; };
  for (auto f : std::vector<std::function<double(double)>>{
           [](double x) { return x * x; }, [](double x) { return std::cos(x); },
           [](double x) { return x * x * x * x; }}) {
    EXPECT_NEAR(fomin::oracle_expectation_1d(model, f), oracle::stationary_expectation(log_rho, f, -8, 8),
                1e-9);
  }
}

TEST(OracleExpectation, OuSecondMoment) {
  EXPECT_NEAR(fomin::oracle_expectation_1d(fomin::ou_model(), [](double x) { return x * x; }), 0.5, 1e-10);
}

}  // namespace
