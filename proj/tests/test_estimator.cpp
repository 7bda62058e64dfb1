#include <algorithm>
#include <chrono>

#include "doctest.h"
#include "oracles.hpp"
#include "qtomo/estimator.hpp"

using namespace qtomo;

namespace {

const Vector kHalfTheta{{-0.44, -0.02, 0.19}};
const Vector kOneTheta{{0.15, -0.14, -0.07, -0.04, -0.15, -0.01, -0.17, -0.23}};

std::shared_ptr<const BasisSet> mub_ptr(int dim) { return std::make_shared<const BasisSet>(mub_bases(dim)); }

DensityMatrix state(const Vector& theta) {
  return bloch_to_density(BlochVector(theta), cached_generators(theta.size() == 3 ? 2 : 3));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LagrangianState random_state(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LagrangianState t;
  t.theta = BlochVector(oracle::random_physical_theta(dim, rng));
  t.lambda = Vector(dim - 1);
  t.gamma = Vector(dim - 1);
  for (int j = 0; j < dim - 1; ++j) {
    t.lambda[j] = u(rng);
    t.gamma[j] = 0.1 + u(rng);
  }
  return t;
}

}  // namespace

TEST_CASE("log_likelihood examples") {
  const auto bases = mub_ptr(2);
  const Sample s = simulate_sample(state(kHalfTheta), bases, 100, 3);
  CHECK(log_likelihood(BlochVector(Vector::Zero(3)), s) == doctest::Approx(std::log(0.5)).epsilon(1e-14));

  Matrix counts = Matrix::Zero(3, 2);
  counts(0, 0) = 34.0;
  counts(1, 0) = 20.0;
  counts(1, 1) = 13.0;
  counts(2, 0) = 16.0;
  counts(2, 1) = 17.0;
  const Sample c(bases, counts);
  const double m = 100.0;
  const Vector p1 = born_probabilities(state(kHalfTheta), (*bases)[1]);
  const Vector p2 = born_probabilities(state(kHalfTheta), (*bases)[2]);
  const double want = (34.0 / m) * std::log(0.595) + (20.0 * std::log(p1[0]) + 13.0 * std::log(p1[1]) +
                                                        16.0 * std::log(p2[0]) + 17.0 * std::log(p2[1])) / m;
  CHECK(log_likelihood(BlochVector(kHalfTheta), c) == doctest::Approx(want).epsilon(1e-13));

  auto records = s.records();
  std::reverse(records.begin(), records.end());
  const Sample reversed = Sample::from_records(bases, records);
  CHECK(log_likelihood(BlochVector(kHalfTheta), reversed) == log_likelihood(BlochVector(kHalfTheta), s));

  Matrix bad = Matrix::Zero(3, 2);
  bad(0, 1) = 5.0;
  CHECK_THROWS_AS(log_likelihood(BlochVector{0.0, 0.0, 1.0}, Sample(bases, bad)), NumericalError);
}

TEST_CASE("score matches finite differences at 20 random admissible points") {
  for (int dim : {2, 3}) {
    const auto bases = mub_ptr(dim);
    const Vector truth = dim == 2 ? kHalfTheta : kOneTheta;
    const Sample s = simulate_sample(state(truth), bases, 1000, 17);
    std::mt19937_64 rng(100 + dim);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector theta = oracle::random_physical_theta(dim, rng);
      const auto f = [&](const Vector& x) { return log_likelihood(BlochVector(x), s); };
      const Vector fd = oracle::gradient(f, theta);
      CHECK(oracle::relative_error(score(BlochVector(theta), s), fd) <= 1e-6);
    }
  }
}

TEST_CASE("score vanishes on exact frequencies") {
  const auto bases = mub_ptr(2);
  const Sample s = expected_sample(state(kHalfTheta), bases, 300.0);
  CHECK(score(BlochVector(kHalfTheta), s).norm() <= 1e-12);
}

TEST_CASE("lagrangian_jacobian matches finite differences of the residual") {
  for (int dim : {2, 3}) {
    const auto bases = mub_ptr(dim);
    const Vector truth = dim == 2 ? kHalfTheta : kOneTheta;
    const Sample s = simulate_sample(state(truth), bases, 1000, 23);
    std::mt19937_64 rng(200 + dim);
    const int k = dim * dim - 1;
    for (int trial = 0; trial < 20; ++trial) {
      const LagrangianState t = random_state(dim, rng);
      const auto h = [&](const Vector& x) { return lagrangian_residual(LagrangianState::unpack(x, k, dim - 1), s); };
      const Matrix fd = oracle::jacobian(h, t.pack());
      const Matrix j = lagrangian_jacobian(t, s);
      CHECK(oracle::relative_error(j, fd) <= 1e-5);
      const Matrix block = j.topLeftCorner(k, k);
      CHECK((block - block.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("theta block of the Jacobian is negative semidefinite without multipliers") {
  for (int dim : {2, 3}) {
    const auto bases = mub_ptr(dim);
    const Sample s = simulate_sample(state(dim == 2 ? kHalfTheta : kOneTheta), bases, 500, 5);
    std::mt19937_64 rng(300 + dim);
    const int k = dim * dim - 1;
    for (int trial = 0; trial < 20; ++trial) {
      LagrangianState t = random_state(dim, rng);
      t.lambda.setZero();
      const Matrix block = lagrangian_jacobian(t, s).topLeftCorner(k, k);
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (block + block.transpose()));
      CHECK(es.eigenvalues().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("lagrangian_residual examples") {
  const auto bases = mub_ptr(2);
  const Sample s = simulate_sample(state(kHalfTheta), bases, 1000, 8);
  const auto r = estimate(s, EstimationConfig{});
  REQUIRE(r.converged);
  CHECK(r.state.lambda.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(lagrangian_residual(r.state, s).norm() <= 1e-9);

  // Pure state on the boundary: constraint and complementarity rows vanish.
  Matrix counts = Matrix::Zero(3, 2);
  counts(0, 0) = 10.0;
  counts(1, 0) = 8.0;
  counts(1, 1) = 2.0;
  counts(2, 0) = 5.0;
  counts(2, 1) = 5.0;
  LagrangianState b;
  b.theta = BlochVector{0.6, 0.0, 0.8};
  b.lambda = Vector::Constant(1, 0.7);
  b.gamma = Vector::Zero(1);
  const Vector h = lagrangian_residual(b, Sample(bases, counts));
  REQUIRE(h.size() == 5);
  CHECK(std::abs(h[3]) <= 1e-15);
  CHECK(h[4] == 0.0);
}

TEST_CASE("newton_solve") {
  const auto bases = mub_ptr(2);
  const Sample s = simulate_sample(state(kHalfTheta), bases, 10000, 31);
  const auto first = newton_solve(initial_state(BlochVector(Vector::Zero(3))), s, EstimationConfig{});
  REQUIRE(first.converged);
  CHECK(oracle::fidelity(first.rho_hat.rho, state(kHalfTheta).rho) >= 0.999);
  const auto again = newton_solve(first.state, s, EstimationConfig{});
  CHECK(again.converged);
  CHECK(again.iterations <= 1);
}

TEST_CASE("bfgs_sa_solve is seed deterministic") {
  const auto bases = mub_ptr(3);
  const Sample s = simulate_sample(state(kOneTheta), bases, 100, 4);
  EstimationConfig cfg;
  cfg.seed = 42;
  const auto t0 = initial_state(BlochVector(Vector::Zero(8)));
  const auto a = bfgs_sa_solve(t0, s, cfg);
  const auto b = bfgs_sa_solve(t0, s, cfg);
  CHECK(a.theta_hat.theta == b.theta_hat.theta);
  CHECK(a.iterations == b.iterations);
  CHECK(a.converged == b.converged);
}

TEST_CASE("bfgs_sa_solve rescues samples where Newton reports a singular Jacobian") {
  const auto bases = mub_ptr(3);
  const EstimationConfig cfg;
  int singular = 0;
  int rescued = 0;
  for (RngSeed seed = 0; seed < 3000 && singular < 100; ++seed) {
    const Sample s = simulate_sample(state(kOneTheta), bases, 100, seed);
    for (const auto& start : multistart_points(s, cfg)) {
      const auto t0 = initial_state(start);
      const auto n = newton_solve(t0, s, cfg);
      if (!n.singular_jacobian) continue;
      ++singular;
      EstimationConfig c = cfg;
      c.seed = seed;
      if (bfgs_sa_solve(t0, s, c).converged) ++rescued;
      break;
    }
  }
  MESSAGE("singular Newton runs: " << singular << ", rescued by BFGS: " << rescued);
  if (singular > 0) CHECK(rescued >= 0.9 * singular);
}

TEST_CASE("estimate recovers theta from perfect frequencies") {
  for (int dim : {2, 3}) {
    const auto bases = mub_ptr(dim);
    const Vector truth = dim == 2 ? kHalfTheta : kOneTheta;
    const Sample s = expected_sample(state(truth), bases, 3000.0);
    const auto r = estimate(s, EstimationConfig{});
    REQUIRE(r.converged);
    CHECK((r.theta_hat.theta - truth).cwiseAbs().maxCoeff() <= 1e-6);
    const auto mm = tomographic_inversion(s);
    CHECK((mm.theta.theta - truth).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(mm.admissible);
    CHECK((mm.theta.theta - r.theta_hat.theta).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("estimate: trace, physicality and likelihood dominance over starts") {
  for (int dim : {2, 3}) {
    const auto bases = mub_ptr(dim);
    const Vector truth = dim == 2 ? kHalfTheta : kOneTheta;
    const EstimationConfig cfg;
    for (RngSeed seed = 0; seed < 20; ++seed) {
      const Sample s = simulate_sample(state(truth), bases, 100, seed);
      const auto r = estimate(s, cfg);
      CHECK(std::abs(r.rho_hat.rho.trace() - 1.0) <= 1e-12);
      if (!r.converged) continue;
      CHECK(r.physical == (oracle::min_eigenvalue(r.rho_hat.rho) >= -1e-9));
      for (const auto& start : multistart_points(s, cfg)) {
        double ll = -std::numeric_limits<double>::infinity();
        try {
          ll = log_likelihood(start, s);
        } catch (const NumericalError&) {
        }
        CHECK(r.scaled_loglik >= ll - 1e-12);
      }
    }
  }
}

TEST_CASE("median fidelity is non-decreasing in m") {
  const auto bases = mub_ptr(3);
  const auto rho0 = state(kOneTheta);
  double previous = 0.0;
  for (int m : {100, 1000, 10000}) {
    std::vector<double> f;
    for (RngSeed seed = 0; seed < 20; ++seed) {
      const auto r = estimate(simulate_sample(rho0, bases, m, seed), EstimationConfig{});
      if (r.converged && r.physical) f.push_back(oracle::fidelity(r.rho_hat.rho, rho0.rho));
    }
    REQUIRE(!f.empty());
    const double med = median(f);
    CHECK(med >= previous);
    previous = med;
  }
}

TEST_CASE("tomographic_inversion closed forms") {
  const auto bases = mub_ptr(2);
  Matrix counts(3, 2);
  counts << 30, 4, 11, 22, 25, 8;
  const auto mm = tomographic_inversion(Sample(bases, counts));
  // Basis 0 measures sigma_z, basis 1 sigma_x, basis 2 sigma_y.
  CHECK(mm.theta[0] == doctest::Approx(2.0 * 11.0 / 33.0 - 1.0).epsilon(1e-12));
  CHECK(mm.theta[1] == doctest::Approx(2.0 * 25.0 / 33.0 - 1.0).epsilon(1e-12));
  CHECK(mm.theta[2] == doctest::Approx(2.0 * 30.0 / 34.0 - 1.0).epsilon(1e-12));

  Matrix ones = Matrix::Zero(3, 2);
  ones.col(0).setConstant(10.0);
  const auto corner = tomographic_inversion(Sample(bases, ones));
  CHECK(corner.theta.theta.norm() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK_FALSE(corner.admissible);
  const auto r = moment_result(Sample(bases, ones));
  CHECK(r.method == EstimationMethod::kMethodOfMoments);
  CHECK_FALSE(r.physical);

  const BasisSet one_basis(BasisKind::kCustom, {(*bases)[0]});
  Matrix c1(1, 2);
  c1 << 3, 4;
  CHECK_THROWS_AS(tomographic_inversion(Sample(std::make_shared<const BasisSet>(one_basis), c1)), NumericalError);
}

TEST_CASE("shrink_to_admissible") {
  const BlochVector outside{1.0, 1.0, 1.0};
  const auto inside = shrink_to_admissible(outside);
  CHECK(is_admissible(inside, cached_structure_constants(2)));
  CHECK(inside.theta.normalized().dot(outside.theta.normalized()) == doctest::Approx(1.0));
  CHECK(shrink_to_admissible(BlochVector(kHalfTheta)).theta == kHalfTheta);
}

TEST_CASE("calibrate_tolerance for spin-1/2") {
  const auto bases = mub_ptr(2);
  const auto rho0 = state(kHalfTheta);
  const auto start = std::chrono::steady_clock::now();
  const auto report = calibrate_tolerance(rho0, bases, EstimationConfig{});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("calibrated tolerance " << report.tolerance << " in " << seconds << " s");
  CHECK(seconds < 60.0);
  CHECK(report.fidelities.size() == 20);
  EstimationConfig cfg;
  cfg.residual_tolerance = report.tolerance;
  cfg.likelihood_tolerance = report.tolerance;
  for (RngSeed seed = 9000; seed < 9020; ++seed) {
    const auto r = estimate(simulate_sample(rho0, bases, 10000, seed), cfg);
    CHECK(r.converged);
    CHECK(oracle::fidelity(r.rho_hat.rho, rho0.rho) >= 0.999);
  }
}

TEST_CASE("EstimationConfig validation") {
  EstimationConfig cfg;
  cfg.multistart_count = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = EstimationConfig{};
  cfg.residual_tolerance = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK(to_string(EstimationMethod::kBfgsAnnealing) == "BFGS_SA");
}
