#pragma once

#include "fomin/invariant_measure.hpp"
#include "fomin/kde.hpp"
#include "fomin/mc_estimate.hpp"
#include "fomin/test_functions.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace fomin {

/// Orientation of the Fomin score: v_z = kScoreSign * <grad log rho, z>. With
/// this choice int <D phi, z> dnu = int v_z phi dnu holds for the
/// Ornstein-Uhlenbeck oracle, where v_z(x) = 2 <x, z>.
inline constexpr double kScoreSign = -1.0;

KdeDensity kde_fit(const EmpiricalMeasure& measure, Bandwidth rule = Bandwidth::silverman());

/// v_z = kScoreSign * <grad log rho_hat, z>. Basis scores at the fitted samples
/// are computed on construction.
class ScoreField {
 public:
  explicit ScoreField(std::shared_ptr<const KdeDensity> density);

  const KdeDensity& density() const { return *density_; }
  double sign_convention() const { return kScoreSign; }

  double operator()(const Vector& x, const Vector& z) const;
  /// (v_{e_1}(x), ..., v_{e_d}(x)).
  Vector basis_scores(const Vector& x) const;

  /// Row i holds the basis scores at point i of the measure (n x d).
  Matrix basis_scores_on(const EmpiricalMeasure& measure) const;

 private:
  std::shared_ptr<const KdeDensity> density_;
  Matrix source_scores_;
};

ScoreField make_score_field(const EmpiricalMeasure& measure, Bandwidth rule = Bandwidth::silverman());

double score(const ScoreField& field, const Vector& x, const Vector& z);

/// (mean |phi|^p)^{1/p} with a delta-method standard error.
MCEstimate lp_norm(const EmpiricalMeasure& measure, const std::function<double(const Vector&)>& phi,
                   double p);

struct IbpReport {
  MCEstimate lhs;         // mean <grad phi, z>
  MCEstimate rhs;         // mean v_z phi
  MCEstimate difference;  // paired lhs - rhs
  MCEstimate phi_norm;    // ||phi||_{L^p}
  double normalized_residual = 0.0;  // |lhs - rhs| / (||phi||_{L^p} |z|), 0 when z = 0
};

IbpReport ibp_residual(const EmpiricalMeasure& measure, const ScoreField& field,
                       const TestFunction& phi, const Vector& z, double p = 2.0);

struct CpEntry {
  std::string label;
  Vector direction;
  MCEstimate gradient_mean;  // mean <grad phi, h>
  MCEstimate score_mean;     // mean v_h phi, the same quantity through the score
  MCEstimate phi_norm;
  double ratio = 0.0;
  double ratio_std_error = 0.0;
};

struct CpReport {
  std::vector<CpEntry> entries;  // battery-major, directions inner
  double sup_ratio = 0.0;
  std::size_t argmax = 0;
  double half_sup_ratio = 0.0;   // over the first ceil(n/2) battery functions
  double score_sup_ratio = 0.0;  // sup with the score-side numerator
  /// |sup - half_sup| / half_sup, 0 when both vanish.
  double stability() const;
};

CpReport estimate_Cp(const EmpiricalMeasure& measure, const ScoreField& field,
                     const std::vector<TestFunction>& battery, const std::vector<Vector>& directions,
                     double p = 2.0);

/// -div F(x) + sum_h v_{e_h}(x) f_h(x).
double dstar(const ScoreField& field, const VectorField& F, const Vector& x);
/// D*(F) at every sample of the measure.
std::vector<double> dstar_on(const EmpiricalMeasure& measure, const ScoreField& field,
                             const VectorField& F);

/// (1/2) tr Hess phi(x) - (1/2) sum_h v_{e_h}(x) d_h phi(x).
double generalized_ou_apply(const ScoreField& field, const TestFunction& phi, const Vector& x);
std::vector<double> generalized_ou_on(const EmpiricalMeasure& measure, const ScoreField& field,
                                      const TestFunction& phi);

struct PairingReport {
  MCEstimate lhs;
  MCEstimate rhs;
  MCEstimate difference;  // paired, per sample
  bool pass = false;      // |difference| < sigma * SE
};

/// mean <grad phi, F> against mean phi D*(F).
PairingReport check_adjointness(const EmpiricalMeasure& measure, const ScoreField& field,
                                const TestFunction& phi, const VectorField& F, double sigma = 4.0);

/// mean (-1/2 D*D phi) psi against -1/2 mean <grad phi, grad psi>.
PairingReport check_dirichlet_form(const EmpiricalMeasure& measure, const ScoreField& field,
                                   const TestFunction& phi, const TestFunction& psi,
                                   double sigma = 4.0);

struct CenteringCheck {
  Vector direction;
  MCEstimate mean;  // mean v_z
  bool pass = false;
};

std::vector<CenteringCheck> check_score_centering(const EmpiricalMeasure& measure,
                                                  const ScoreField& field,
                                                  const std::vector<Vector>& directions,
                                                  double sigma = 4.0);

struct LpLadderStep {
  double p = 0.0;
  MCEstimate norm;  // ||v_z||_{L^p}
};

struct LpLadder {
  std::vector<LpLadderStep> steps;
  bool finite = false;
  bool increasing = false;
};

LpLadder score_lp_ladder(const EmpiricalMeasure& measure, const ScoreField& field, const Vector& z,
                         const std::vector<double>& ps = {1.0, 2.0, 4.0, 8.0});

/// ||v_hat - v||_{L^2} / ||v||_{L^2} over the measure, where v = kScoreSign *
/// grad log rho is the model's analytic stationary score. Throws when the
/// model has no oracle.
double score_oracle_l2_error(const EmpiricalMeasure& measure, const ScoreField& field,
                             const DriftModel& model);

/// CSV x_1..x_d, v_e1..v_ed at the samples of the measure.
void write_score_csv(const EmpiricalMeasure& measure, const ScoreField& field, std::ostream& out);

}  // namespace fomin
