#include "qtomo/inference.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace qtomo {

namespace {

const StructureConstants& structure_for(const BlochVector& theta) {
  const int dim = theta.size() == 3 ? 2 : theta.size() == 8 ? 3 : 0;
  require(dim != 0, "inference: theta must have length 3 or 8");
  return cached_structure_constants(dim);
}

void require_interior(const BlochVector& theta_hat) {
  if (has_active_constraint(theta_hat))
    throw ActiveConstraintError("inference: constraint active at the estimate; asymptotics unreliable");
}

}  // namespace

bool has_active_constraint(const BlochVector& theta) {
  const auto c = char_poly_coefficients(theta, structure_for(theta)).values;
  for (Eigen::Index j = 1; j < c.size(); ++j)
    if (std::abs(c[j]) <= kActiveConstraintTolerance) return true;
  return false;
}

FisherEstimate observed_fisher_hessian(const BlochVector& theta_hat, const Sample& sample) {
  require_interior(theta_hat);
  const LikelihoodModel model(sample);
  Matrix h = -model.hessian(theta_hat.theta);
  return {0.5 * (h + h.transpose()), FisherKind::kHessian, model.total()};
}

FisherEstimate observed_fisher_opg(const BlochVector& theta_hat, const Sample& sample) {
  require_interior(theta_hat);
  const LikelihoodModel model(sample);
  Matrix h = model.score_outer_products(theta_hat.theta);
  return {0.5 * (h + h.transpose()), FisherKind::kOpg, model.total()};
}

AsymptoticCovariance asymptotic_covariance(const FisherEstimate& fisher, CovarianceScaling scaling) {
  require(fisher.m > 0.0, "asymptotic_covariance: sample size must be positive");
  require(fisher.matrix.rows() == fisher.matrix.cols() && fisher.matrix.rows() > 0,
          "asymptotic_covariance: information matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(fisher.matrix);
  const Vector ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() >= kMaxFisherCondition)
    throw NumericalError("asymptotic_covariance: information matrix is singular");
  const double factor = scaling == CovarianceScaling::kPerObservation ? fisher.m : fisher.m * fisher.m;
  const Matrix inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  Matrix sigma = inv / factor;
  return {0.5 * (sigma + sigma.transpose())};
}

AsymptoticCovariance restrict_covariance(const AsymptoticCovariance& sigma, const std::vector<int>& coords) {
  const auto n = sigma.sigma.rows();
  Matrix out(coords.size(), coords.size());
  for (std::size_t a = 0; a < coords.size(); ++a) {
    require(coords[a] >= 0 && coords[a] < n, "restrict_covariance: coordinate out of range");
    for (std::size_t b = 0; b < coords.size(); ++b) out(a, b) = sigma.sigma(coords[a], coords[b]);
  }
  return {out};
}

double delta_method_variance(const Vector& grad, const AsymptoticCovariance& sigma) {
  require(grad.size() == sigma.sigma.rows(), "delta_method_variance: gradient length mismatch");
  return grad.dot(sigma.sigma * grad);
}

Vector diagonal_gradient(int i, const GeneratorSet& gens) {
  require(i >= 0 && i < gens.dim, "diagonal_gradient: index out of range");
  Vector g(gens.count());
  for (int k = 0; k < gens.count(); ++k) g[k] = 0.5 * gens.lambdas[k](i, i).real();
  return g;
}

Matrix eigenvalue_gradient(const DensityMatrix& rho_hat, const GeneratorSet& gens) {
  require(rho_hat.dim() == gens.dim, "eigenvalue_gradient: dimension mismatch");
  const auto ed = hermitian_eigen(rho_hat);
  for (Eigen::Index i = 0; i + 1 < ed.eigenvalues.size(); ++i)
    if (ed.eigenvalues[i] - ed.eigenvalues[i + 1] <= 1e-8)
      throw NumericalError("eigenvalue_gradient: near-degenerate spectrum");
  Matrix out(gens.dim, gens.count());
  for (int i = 0; i < gens.dim; ++i) {
    const CVector x = ed.eigenvectors.col(i);
    for (int k = 0; k < gens.count(); ++k) {
      const Complex v = 0.5 * x.dot(gens.lambdas[k] * x);
      if (std::abs(v.imag()) > 1e-10) throw NumericalError("eigenvalue_gradient: non-real derivative");
      out(i, k) = v.real();
    }
  }
  return out;
}

Interval confidence_interval(double estimate, double se, double level) {
  require(se >= 0.0, "confidence_interval: se must be non-negative");
  require(level > 0.0 && level < 1.0, "confidence_interval: level must be in (0,1)");
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 * (1.0 + level));
  return {estimate - z * se, estimate + z * se};
}

double wald_critical_value(int df, double size) {
  require(df >= 1, "wald_critical_value: df must be positive");
  require(size > 0.0 && size < 1.0, "wald_critical_value: size must be in (0,1)");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), 1.0 - size);
}

TestReport t_statistic(double value, double null_value, double se) {
  require(se > 0.0, "t_statistic: se must be positive");
  TestReport r;
  r.statistic = (value - null_value) / se;
  r.kind = TestKind::kT;
  r.df = 1;
  r.critical_value = kTCriticalValue;
  r.reject = std::abs(r.statistic) > kTCriticalValue;
  return r;
}

TestReport wald_statistic(const Vector& v, const AsymptoticCovariance& sigma) {
  require(v.size() > 0 && sigma.sigma.rows() == v.size() && sigma.sigma.cols() == v.size(),
          "wald_statistic: covariance must match the tested coordinates");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma.sigma);
  const Vector ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() >= kMaxFisherCondition)
    throw NumericalError("wald_statistic: restricted covariance is singular");
  const Vector z = eig.eigenvectors().transpose() * v;
  TestReport r;
  r.statistic = z.cwiseAbs2().cwiseQuotient(ev).sum();
  r.kind = TestKind::kWald;
  r.df = static_cast<int>(v.size());
  r.critical_value = wald_critical_value(r.df);
  r.reject = r.statistic > r.critical_value;
  return r;
}

}  // namespace qtomo
