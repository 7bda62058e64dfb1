#pragma once

#include <vector>

#include "qtomo/estimator.hpp"

namespace qtomo {

enum class FisherKind { kHessian, kOpg };

/// Observed information per observation, with the sample size it came from.
struct FisherEstimate {
  Matrix matrix;
  FisherKind kind = FisherKind::kHessian;
  double m = 0.0;
};

/// Inference refused because a constraint is active at the estimate.
class ActiveConstraintError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline constexpr double kActiveConstraintTolerance = 1e-8;

bool has_active_constraint(const BlochVector& theta);

/// -(1/m) d^2 ln L / dtheta dtheta^T at theta_hat.
FisherEstimate observed_fisher_hessian(const BlochVector& theta_hat, const Sample& sample);

/// (1/m) sum over observations of s s^T, s the per-observation score.
FisherEstimate observed_fisher_opg(const BlochVector& theta_hat, const Sample& sample);

/// How the per-observation information is turned into a covariance of theta_hat.
///
/// kPerObservation: sigma = (m I)^-1, standard errors fall as 1/sqrt(m).
/// kTotalInformation: sigma = (m I_1)^-1 with I_1 = m I the unnormalized
/// observed information, so standard errors fall as 1/m. The reproduction
/// tables and size/power experiments use this form.
enum class CovarianceScaling { kPerObservation, kTotalInformation };

struct AsymptoticCovariance {
  Matrix sigma;

  Vector standard_errors() const { return sigma.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

inline constexpr double kMaxFisherCondition = 1e12;

AsymptoticCovariance asymptotic_covariance(const FisherEstimate& fisher,
                                           CovarianceScaling scaling = CovarianceScaling::kPerObservation);

AsymptoticCovariance restrict_covariance(const AsymptoticCovariance& sigma, const std::vector<int>& coords);

double delta_method_variance(const Vector& grad, const AsymptoticCovariance& sigma);

/// Gradient of rho_ii (zero-based i) in theta: (l_k)_ii / 2.
Vector diagonal_gradient(int i, const GeneratorSet& gens);

/// Row i holds d delta_i / d theta_k = x_i^dagger (l_k / 2) x_i, eigenvalues descending.
Matrix eigenvalue_gradient(const DensityMatrix& rho_hat, const GeneratorSet& gens);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
};

Interval confidence_interval(double estimate, double se, double level);

enum class TestKind { kT, kWald };

struct TestReport {
  double statistic = 0.0;
  TestKind kind = TestKind::kT;
  int df = 1;
  double critical_value = 0.0;
  bool reject = false;
};

inline constexpr double kTCriticalValue = 1.96;

/// Upper (1 - size) quantile of chi-squared with df degrees of freedom.
double wald_critical_value(int df, double size = 0.05);

TestReport t_statistic(double value, double null_value, double se);

/// W = v^T sigma^-1 v; sigma must already be restricted to the tested coordinates.
TestReport wald_statistic(const Vector& v, const AsymptoticCovariance& sigma);

}  // namespace qtomo
