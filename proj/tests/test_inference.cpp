#include "doctest.h"
#include "oracles.hpp"
#include "qtomo/inference.hpp"

using namespace qtomo;

namespace {

const Vector kHalfTheta{{-0.44, -0.02, 0.19}};
const Vector kOneTheta{{0.15, -0.14, -0.07, -0.04, -0.15, -0.01, -0.17, -0.23}};

std::shared_ptr<const BasisSet> mub_ptr(int dim) { return std::make_shared<const BasisSet>(mub_bases(dim)); }

DensityMatrix state(const Vector& theta) {
  return bloch_to_density(BlochVector(theta), cached_generators(theta.size() == 3 ? 2 : 3));
}

AsymptoticCovariance diag_sigma(const Vector& d) { return {Matrix(d.asDiagonal())}; }

}  // namespace

TEST_CASE("observed Fisher at the maximally mixed point") {
  const auto bases = mub_ptr(2);
  const Sample s(bases, Matrix::Constant(3, 2, 10.0));
  const auto h = observed_fisher_hessian(BlochVector(Vector::Zero(3)), s);
  CHECK((h.matrix - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(h.m == 60.0);
  const auto g = observed_fisher_opg(BlochVector(Vector::Zero(3)), s);
  CHECK((g.matrix - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("Hessian Fisher matches finite differences of the score") {
  for (int dim : {2, 3}) {
    const auto bases = mub_ptr(dim);
    const Sample s = simulate_sample(state(dim == 2 ? kHalfTheta : kOneTheta), bases, 1000, 3);
    std::mt19937_64 rng(dim);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector theta = oracle::random_physical_theta(dim, rng);
      const auto f = [&](const Vector& x) { return score(BlochVector(x), s); };
      const Matrix fd = -oracle::jacobian(f, theta);
      const auto fisher = observed_fisher_hessian(BlochVector(theta), s);
      CHECK(oracle::relative_error(fisher.matrix, fd) <= 1e-5);
      CHECK((fisher.matrix - fisher.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
      const auto opg = observed_fisher_opg(BlochVector(theta), s);
      CHECK(oracle::min_eigenvalue(opg.matrix.cast<std::complex<double>>()) >= -1e-12);
      CHECK(oracle::relative_error(opg.matrix, fisher.matrix) <= 1e-12);
    }
  }
}

TEST_CASE("single-observation OPG is rank one") {
  const auto bases = mub_ptr(3);
  const Sample s = Sample::from_records(bases, {ObservationRecord{2, 3}});
  const auto opg = observed_fisher_opg(BlochVector(kOneTheta), s);
  Eigen::JacobiSVD<Matrix> svd(opg.matrix);
  const Vector sv = svd.singularValues();
  CHECK(sv[0] > 0.0);
  CHECK(sv[1] <= 1e-12 * sv[0]);
}

TEST_CASE("active constraints are refused") {
  const auto bases = mub_ptr(2);
  const Sample s(bases, Matrix::Constant(3, 2, 10.0));
  const BlochVector pure{0.6, 0.0, 0.8};
  CHECK(has_active_constraint(pure));
  CHECK_FALSE(has_active_constraint(BlochVector(kHalfTheta)));
  CHECK_THROWS_AS(observed_fisher_hessian(pure, s), ActiveConstraintError);
  CHECK_THROWS_AS(observed_fisher_opg(pure, s), ActiveConstraintError);
}

TEST_CASE("asymptotic_covariance scaling conventions") {
  const auto bases = mub_ptr(2);
  const auto rho0 = state(kHalfTheta);
  bool in_range = true;
  for (RngSeed seed = 0; seed < 50; ++seed) {
    const Sample s = simulate_sample(rho0, bases, 100, seed);
    const auto r = estimate(s, EstimationConfig{});
    if (!r.converged || !r.physical || has_active_constraint(r.theta_hat)) continue;
    const auto se = asymptotic_covariance(observed_fisher_hessian(r.theta_hat, s),
                                          CovarianceScaling::kTotalInformation).standard_errors();
    for (int j = 0; j < 3; ++j) in_range = in_range && se[j] >= 0.004 * 0.5 && se[j] <= 0.02 * 1.5;
  }
  CHECK(in_range);

  const Sample base = expected_sample(rho0, bases, 300.0);
  const Sample four = expected_sample(rho0, bases, 1200.0);
  const auto se1 = asymptotic_covariance(observed_fisher_hessian(BlochVector(kHalfTheta), base)).standard_errors();
  const auto se4 = asymptotic_covariance(observed_fisher_hessian(BlochVector(kHalfTheta), four)).standard_errors();
  for (int j = 0; j < 3; ++j) CHECK(se4[j] == doctest::Approx(0.5 * se1[j]).epsilon(1e-10));
  const auto total = asymptotic_covariance(observed_fisher_hessian(BlochVector(kHalfTheta), base),
                                           CovarianceScaling::kTotalInformation);
  const auto per = asymptotic_covariance(observed_fisher_hessian(BlochVector(kHalfTheta), base));
  CHECK((total.sigma * 300.0 - per.sigma).cwiseAbs().maxCoeff() <= 1e-12);

  FisherEstimate singular{Matrix::Zero(3, 3), FisherKind::kHessian, 100.0};
  singular.matrix(0, 0) = 1.0;
  CHECK_THROWS_AS(asymptotic_covariance(singular), NumericalError);
}

TEST_CASE("restrict_covariance and delta method") {
  Matrix m(3, 3);
  m << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
  const AsymptoticCovariance sigma{m};
  const auto r = restrict_covariance(sigma, {0, 2});
  CHECK(r.sigma(0, 0) == 4.0);
  CHECK(r.sigma(0, 1) == 0.5);
  CHECK(r.sigma(1, 1) == 2.0);
  CHECK(delta_method_variance(Vector::Unit(3, 1), sigma) == 3.0);
  const Vector g11 = diagonal_gradient(0, cached_generators(2));
  CHECK((g11 - Vector{{0.0, 0.0, 0.5}}).norm() <= 1e-15);
  CHECK(delta_method_variance(g11, sigma) == doctest::Approx(0.5));
}

TEST_CASE("rho11 standard error: tabulated scale at m = 100, simulation agreement at m = 1e4") {
  const auto bases = mub_ptr(2);
  const auto rho0 = state(kHalfTheta);
  const Vector g11 = diagonal_gradient(0, cached_generators(2));
  // Total-information convention at m = 100: se of rho11 close to 0.01.
  const Sample small = expected_sample(rho0, bases, 100.0);
  const auto total = asymptotic_covariance(observed_fisher_hessian(BlochVector(kHalfTheta), small),
                                           CovarianceScaling::kTotalInformation);
  const double se_small = std::sqrt(delta_method_variance(g11, total));
  CHECK(se_small >= 0.005);
  CHECK(se_small <= 0.015);
  CHECK(std::round(se_small * 100.0) / 100.0 == doctest::Approx(0.01));

  // Per-observation convention against the simulated spread at m = 1e4.
  const Sample s = expected_sample(rho0, bases, 10000.0);
  const auto sigma = asymptotic_covariance(observed_fisher_hessian(BlochVector(kHalfTheta), s));
  const double se = std::sqrt(delta_method_variance(g11, sigma));
  CHECK(se == doctest::Approx(std::sqrt(0.595 * 0.405 / 3334.0)).epsilon(0.02));
  std::vector<double> values;
  for (RngSeed seed = 0; seed < 200; ++seed) {
    const auto r = estimate(simulate_sample(rho0, bases, 10000, seed), EstimationConfig{});
    if (r.converged) values.push_back(r.rho_hat.rho(0, 0).real());
  }
  const double sim_sd = oracle::mean_std(values).second;
  CHECK(sim_sd <= 3.0 * se);
  CHECK(sim_sd >= se / 3.0);
}

TEST_CASE("eigenvalue_gradient") {
  const auto& g2 = cached_generators(2);
  const Matrix grad = eigenvalue_gradient(state(kHalfTheta), g2);
  const double r = kHalfTheta.norm();
  for (int k = 0; k < 3; ++k) {
    CHECK(grad(0, k) == doctest::Approx(kHalfTheta[k] / (2.0 * r)).epsilon(1e-12));
    CHECK(grad(1, k) == doctest::Approx(-kHalfTheta[k] / (2.0 * r)).epsilon(1e-12));
  }
  const auto& g3 = cached_generators(3);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector theta = trial == 0 ? kOneTheta : oracle::random_physical_theta(3, rng);
    const Matrix j = eigenvalue_gradient(state(theta), g3);
    CHECK(j.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    const auto f = [](const Vector& x) {
      Vector ev = oracle::eigenvalues(oracle::density(x));
      return Vector(ev.reverse());
    };
    CHECK(oracle::relative_error(j, oracle::jacobian(f, theta)) <= 1e-5);
  }
  CHECK_THROWS_AS(eigenvalue_gradient(DensityMatrix(CMatrix(CMatrix::Identity(2, 2) / 2.0)), g2), NumericalError);
}

TEST_CASE("confidence_interval") {
  const auto ci = confidence_interval(-0.45, 0.004, 0.95);
  CHECK(ci.lower == doctest::Approx(-0.458).epsilon(1e-3));
  CHECK(ci.upper == doctest::Approx(-0.442).epsilon(1e-3));
  CHECK(std::round(ci.lower * 100.0) / 100.0 == doctest::Approx(-0.46));
  CHECK(std::round(ci.upper * 100.0) / 100.0 == doctest::Approx(-0.44));
  CHECK(confidence_interval(0.3, 1.0, 0.95).width() == doctest::Approx(3.9199).epsilon(1e-4));
  const auto d = confidence_interval(0.3, 0.0, 0.95);
  CHECK(d.lower == 0.3);
  CHECK(d.upper == 0.3);
  CHECK_THROWS_AS(confidence_interval(0.0, -1.0, 0.95), InvalidArgument);
}

TEST_CASE("t_statistic") {
  const auto zero = t_statistic(0.2, 0.2, 0.05);
  CHECK(zero.statistic == 0.0);
  CHECK_FALSE(zero.reject);
  const auto big = t_statistic(0.5, 0.02, 0.02);
  CHECK(big.statistic == doctest::Approx(24.0));
  CHECK(big.reject);
  CHECK(big.critical_value == 1.96);
  CHECK_THROWS_AS(t_statistic(0.1, 0.0, 0.0), InvalidArgument);
}

TEST_CASE("wald_statistic") {
  const auto sigma = diag_sigma(Vector::Ones(3));
  const auto z = wald_statistic(Vector::Zero(3), sigma);
  CHECK(z.statistic == 0.0);
  CHECK_FALSE(z.reject);
  const auto w = wald_statistic(Vector::Constant(3, 2.0), sigma);
  CHECK(w.statistic == doctest::Approx(12.0));
  CHECK(w.df == 3);
  CHECK(w.critical_value == doctest::Approx(7.8147279).epsilon(1e-7));
  CHECK(w.reject);
  CHECK(wald_critical_value(1) == doctest::Approx(3.8414588).epsilon(1e-7));

  // W is invariant under invertible linear reparameterization v -> A v, Sigma -> A Sigma A^T.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix b(3, 3), a(3, 3);
  Vector v(3);
  for (int i = 0; i < 3; ++i) {
    v[i] = n(rng);
    for (int j = 0; j < 3; ++j) {
      b(i, j) = n(rng);
      a(i, j) = n(rng);
    }
  }
  const AsymptoticCovariance s{b * b.transpose() + 0.5 * Matrix::Identity(3, 3)};
  const AsymptoticCovariance t{a * s.sigma * a.transpose()};
  CHECK(wald_statistic(a * v, t).statistic == doctest::Approx(wald_statistic(v, s).statistic).epsilon(1e-9));
  CHECK_THROWS_AS(wald_statistic(Vector::Ones(2), sigma), InvalidArgument);
}
