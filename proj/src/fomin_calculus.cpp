#include "fomin/fomin_calculus.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace fomin {
namespace {

template <typename F>
std::vector<double> per_sample(const EmpiricalMeasure& measure, F&& f) {
  std::vector<double> out(measure.size());
  for (std::size_t i = 0; i < measure.size(); ++i) out[i] = f(i, measure.point(i));
  return out;
}

std::vector<double> paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

double ratio_std_error(double num, double num_se, double den, double den_se) {
  if (num == 0.0) return num_se / den;
  const double r = std::abs(num) / den;
  return r * std::hypot(num_se / num, den_se / den);
}

MCEstimate lp_norm_of_values(const EmpiricalMeasure& measure, std::vector<double> values,
                             double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  for (double& v : values) v = std::pow(std::abs(v), p);
  const MCEstimate m = measure.mean_of(values);
  const double norm = std::pow(m.value, 1.0 / p);
  // d/dm m^{1/p} = m^{1/p - 1} / p
  const double se = m.value > 0.0 ? norm / (p * m.value) * m.std_error : 0.0;
  return {norm, se, m.n_samples};
}

}  // namespace

KdeDensity kde_fit(const EmpiricalMeasure& measure, Bandwidth rule) {
  return KdeDensity(measure, rule);
}

ScoreField::ScoreField(std::shared_ptr<const KdeDensity> density) : density_(std::move(density)) {
  if (!density_) throw std::invalid_argument("ScoreField: null density");
  source_scores_ = kScoreSign * density_->grad_log_density_rows(density_->source());
}

double ScoreField::operator()(const Vector& x, const Vector& z) const {
  if (z.size() != density_->dim()) throw std::invalid_argument("score: direction dimension mismatch");
  if (z.isZero(0.0)) return 0.0;
  return kScoreSign * density_->grad_log_density(x).dot(z);
}

Vector ScoreField::basis_scores(const Vector& x) const {
  return kScoreSign * density_->grad_log_density(x);
}

Matrix ScoreField::basis_scores_on(const EmpiricalMeasure& measure) const {
  if (density_->fitted_on(measure.samples())) return source_scores_;
  return kScoreSign * density_->grad_log_density_rows(measure.samples());
}

ScoreField make_score_field(const EmpiricalMeasure& measure, Bandwidth rule) {
  return ScoreField(std::make_shared<const KdeDensity>(measure, rule));
}

double score(const ScoreField& field, const Vector& x, const Vector& z) { return field(x, z); }


MCEstimate lp_norm(const EmpiricalMeasure& measure, const std::function<double(const Vector&)>& phi,
                   double p) {
  return lp_norm_of_values(measure, per_sample(measure, [&](std::size_t, const Vector& x) { return phi(x); }), p);
}

IbpReport ibp_residual(const EmpiricalMeasure& measure, const ScoreField& field,
                       const TestFunction& phi, const Vector& z, double p) {
  if (z.size() != measure.dim()) throw std::invalid_argument("ibp_residual: direction dimension mismatch");
  const Matrix scores = field.basis_scores_on(measure);
  const auto lhs = per_sample(measure, [&](std::size_t, const Vector& x) { return phi.grad(x).dot(z); });
  const auto rhs = per_sample(measure, [&](std::size_t i, const Vector& x) {
    return scores.row(static_cast<Eigen::Index>(i)).dot(z) * phi(x);
  });
  IbpReport report;
  report.lhs = measure.mean_of(lhs);
  report.rhs = measure.mean_of(rhs);
  report.difference = measure.mean_of(paired_difference(lhs, rhs));
  report.phi_norm = lp_norm(measure, phi.phi, p);
  const double scale = report.phi_norm.value * z.norm();
  report.normalized_residual = scale > 0.0 ? std::abs(report.difference.value) / scale : 0.0;
  return report;
}

double CpReport::stability() const {
  if (half_sup_ratio == 0.0) return sup_ratio == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(sup_ratio - half_sup_ratio) / half_sup_ratio;
}

CpReport estimate_Cp(const EmpiricalMeasure& measure, const ScoreField& field,
                     const std::vector<TestFunction>& battery, const std::vector<Vector>& directions,
                     double p) {
  if (battery.empty() || directions.empty()) throw std::invalid_argument("estimate_Cp: empty battery");
  const Matrix scores = field.basis_scores_on(measure);
  const std::size_t half = (battery.size() + 1) / 2;
  CpReport report;
  for (std::size_t b = 0; b < battery.size(); ++b) {
    const TestFunction& phi = battery[b];
    const MCEstimate norm = lp_norm(measure, phi.phi, p);
    if (!(norm.value > 0.0)) {
      throw std::invalid_argument("estimate_Cp: " + phi.label + " has zero L^p norm");
    }
    for (const Vector& h : directions) {
      if (h.size() != measure.dim()) throw std::invalid_argument("estimate_Cp: direction dimension mismatch");
      CpEntry e;
      e.label = phi.label;
      e.direction = h;
      e.phi_norm = norm;
      e.gradient_mean = measure.mean_of(
          per_sample(measure, [&](std::size_t, const Vector& x) { return phi.grad(x).dot(h); }));
      e.score_mean = measure.mean_of(per_sample(measure, [&](std::size_t i, const Vector& x) {
        return scores.row(static_cast<Eigen::Index>(i)).dot(h) * phi(x);
      }));
      const double hn = h.norm();
      if (hn > 0.0) {
        e.ratio = std::abs(e.gradient_mean.value) / (norm.value * hn);
        e.ratio_std_error =
            ratio_std_error(e.gradient_mean.value, e.gradient_mean.std_error, norm.value, norm.std_error) / hn;
        report.score_sup_ratio =
            std::max(report.score_sup_ratio, std::abs(e.score_mean.value) / (norm.value * hn));
      }
      if (report.entries.empty() || e.ratio > report.sup_ratio) {
        report.sup_ratio = e.ratio;
        report.argmax = report.entries.size();
      }
      if (b < half) report.half_sup_ratio = std::max(report.half_sup_ratio, e.ratio);
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

double dstar(const ScoreField& field, const VectorField& F, const Vector& x) {
  if (F.dim() != x.size()) throw std::invalid_argument("dstar: field dimension mismatch");
  return -F.divergence(x) + field.basis_scores(x).dot(F(x));
}

std::vector<double> dstar_on(const EmpiricalMeasure& measure, const ScoreField& field,
                             const VectorField& F) {
  if (F.dim() != measure.dim()) throw std::invalid_argument("dstar: field dimension mismatch");
  const Matrix scores = field.basis_scores_on(measure);
  return per_sample(measure, [&](std::size_t i, const Vector& x) {
    return -F.divergence(x) + scores.row(static_cast<Eigen::Index>(i)).dot(F(x));
  });
}

double generalized_ou_apply(const ScoreField& field, const TestFunction& phi, const Vector& x) {
  if (!phi.has_hessian()) throw std::invalid_argument("generalized_ou_apply: " + phi.label + " has no Hessian");
  return 0.5 * phi.hessian(x).trace() - 0.5 * field.basis_scores(x).dot(phi.grad(x));
}

std::vector<double> generalized_ou_on(const EmpiricalMeasure& measure, const ScoreField& field,
                                      const TestFunction& phi) {
  if (!phi.has_hessian()) throw std::invalid_argument("generalized_ou_apply: " + phi.label + " has no Hessian");
  const Matrix scores = field.basis_scores_on(measure);
  return per_sample(measure, [&](std::size_t i, const Vector& x) {
    return 0.5 * phi.hessian(x).trace() - 0.5 * scores.row(static_cast<Eigen::Index>(i)).dot(phi.grad(x));
  });
}

PairingReport check_adjointness(const EmpiricalMeasure& measure, const ScoreField& field,
                                const TestFunction& phi, const VectorField& F, double sigma) {
  const auto lhs = per_sample(measure, [&](std::size_t, const Vector& x) { return phi.grad(x).dot(F(x)); });
  const auto dstar_values = dstar_on(measure, field, F);
  const auto rhs = per_sample(measure, [&](std::size_t i, const Vector& x) { return phi(x) * dstar_values[i]; });
  PairingReport r;
  r.lhs = measure.mean_of(lhs);
  r.rhs = measure.mean_of(rhs);
  r.difference = measure.mean_of(paired_difference(lhs, rhs));
  r.pass = std::abs(r.difference.value) < sigma * r.difference.std_error;
  return r;
}

PairingReport check_dirichlet_form(const EmpiricalMeasure& measure, const ScoreField& field,
                                   const TestFunction& phi, const TestFunction& psi, double sigma) {
  const auto generator = generalized_ou_on(measure, field, phi);
  const auto lhs = per_sample(measure, [&](std::size_t i, const Vector& x) { return generator[i] * psi(x); });
  const auto rhs = per_sample(measure, [&](std::size_t, const Vector& x) {
    return -0.5 * phi.grad(x).dot(psi.grad(x));
  });
  PairingReport r;
  r.lhs = measure.mean_of(lhs);
  r.rhs = measure.mean_of(rhs);
  r.difference = measure.mean_of(paired_difference(lhs, rhs));
  r.pass = std::abs(r.difference.value) < sigma * r.difference.std_error;
  return r;
}

std::vector<CenteringCheck> check_score_centering(const EmpiricalMeasure& measure,
                                                  const ScoreField& field,
                                                  const std::vector<Vector>& directions,
                                                  double sigma) {
  const Matrix scores = field.basis_scores_on(measure);
  std::vector<CenteringCheck> out;
  for (const Vector& z : directions) {
    const Eigen::VectorXd v = scores * z;
    CenteringCheck c;
    c.direction = z;
    c.mean = measure.mean_of(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
    c.pass = std::abs(c.mean.value) < sigma * c.mean.std_error;
    out.push_back(c);
  }
  return out;
}

LpLadder score_lp_ladder(const EmpiricalMeasure& measure, const ScoreField& field, const Vector& z,
                         const std::vector<double>& ps) {
  const Matrix scores = field.basis_scores_on(measure);
  const Eigen::VectorXd v = scores * z;
  LpLadder ladder;
  ladder.finite = true;
  ladder.increasing = true;
  for (double p : ps) {
    LpLadderStep step;
    step.p = p;
    step.norm = lp_norm_of_values(measure, std::vector<double>(v.data(), v.data() + v.size()), p);
    ladder.finite = ladder.finite && std::isfinite(step.norm.value);
    if (!ladder.steps.empty() && !(step.norm.value >= ladder.steps.back().norm.value)) {
      ladder.increasing = false;
    }
    ladder.steps.push_back(step);
  }
  return ladder;
}

double score_oracle_l2_error(const EmpiricalMeasure& measure, const ScoreField& field,
                             const DriftModel& model) {
  if (!model.oracle() || !model.oracle()->grad_log_density) {
    throw std::invalid_argument("score_oracle_l2_error: model " + model.name() + " has no score oracle");
  }
  const Matrix scores = field.basis_scores_on(measure);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const Vector truth = kScoreSign * model.oracle()->grad_log_density(measure.point(i));
    const double w = measure.weights()[i];
    err += w * (scores.row(static_cast<Eigen::Index>(i)).transpose() - truth).squaredNorm();
    ref += w * truth.squaredNorm();
  }
  return std::sqrt(err / ref);
}

void write_score_csv(const EmpiricalMeasure& measure, const ScoreField& field, std::ostream& out) {
  const Matrix scores = field.basis_scores_on(measure);
  const int d = measure.dim();
  for (int h = 0; h < d; ++h) out << (h ? "," : "") << "x_" << h + 1;
  for (int h = 0; h < d; ++h) out << ",v_e" << h + 1;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int h = 0; h < d; ++h) out << (h ? "," : "") << measure.samples()(r, h);
    for (int h = 0; h < d; ++h) out << ',' << scores(r, h);
    out << '\n';
  }
}

}  // namespace fomin
