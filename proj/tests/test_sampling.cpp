#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "qtomo/sampling.hpp"
#include "qtomo/serialization.hpp"

using namespace qtomo;

namespace {

std::shared_ptr<const BasisSet> mub_ptr(int dim) { return std::make_shared<const BasisSet>(mub_bases(dim)); }

DensityMatrix spin_half() { return bloch_to_density(BlochVector{-0.44, -0.02, 0.19}, cached_generators(2)); }

}  // namespace

TEST_CASE("allocate_counts") {
  CHECK(allocate_counts(99, 3) == std::vector<int>{33, 33, 33});
  CHECK(allocate_counts(100, 3) == std::vector<int>{34, 33, 33});
  CHECK(allocate_counts(100, 4) == std::vector<int>{25, 25, 25, 25});
  CHECK(allocate_counts(101, 4) == std::vector<int>{26, 25, 25, 25});
  CHECK_THROWS_AS(allocate_counts(2, 3), InvalidArgument);
}

TEST_CASE("multinomial_draw") {
  CHECK(multinomial_draw(Vector{{1.0, 0.0}}, 10, RngSeed{1}) == std::vector<int>{10, 0});
  CHECK(multinomial_draw(Vector{{0.2, 0.3, 0.5}}, 0, RngSeed{1}) == std::vector<int>{0, 0, 0});
  const auto big = multinomial_draw(Vector{{0.5, 0.5}}, 1000000, RngSeed{12});
  CHECK(std::abs(big[0] - 500000) <= 2000);
  CHECK(big[0] + big[1] == 1000000);
  CHECK(multinomial_draw(Vector{{0.2, 0.3, 0.5}}, 50, RngSeed{4}) ==
        multinomial_draw(Vector{{0.2, 0.3, 0.5}}, 50, RngSeed{4}));
  CHECK_THROWS_AS(multinomial_draw(Vector{{0.5, 0.6}}, 10, RngSeed{1}), InvalidArgument);
  CHECK_THROWS_AS(multinomial_draw(Vector{{1.2, -0.2}}, 10, RngSeed{1}), InvalidArgument);
}

TEST_CASE("simulate_sample: allocation, records and counts") {
  const auto bases = mub_ptr(2);
  const Sample s = simulate_sample(spin_half(), bases, 100, 5);
  CHECK(s.total() == 100.0);
  CHECK(s.records().size() == 100);
  CHECK(s.basis_total(0) == 34.0);
  CHECK(s.basis_total(1) == 33.0);
  CHECK(s.basis_total(2) == 33.0);
  Matrix tally = Matrix::Zero(3, 2);
  for (const auto& r : s.records()) tally(r.basis, r.outcome - 1) += 1.0;
  CHECK(tally == s.counts());

  CMatrix up = CMatrix::Zero(2, 2);
  up(0, 0) = 1.0;
  const Sample pure = simulate_sample(DensityMatrix(up), bases, 90, 3);
  CHECK(pure.counts()(0, 0) == 30.0);
  CHECK(pure.counts()(0, 1) == 0.0);
  for (const auto& r : pure.records())
    if (r.basis == 0) CHECK(r.outcome == 1);
}

TEST_CASE("simulate_sample is deterministic per seed") {
  const auto bases = mub_ptr(3);
  const auto rho = bloch_to_density(BlochVector{0.15, -0.14, -0.07, -0.04, -0.15, -0.01, -0.17, -0.23},
                                    cached_generators(3));
  const Sample a = simulate_sample(rho, bases, 400, 77);
  const Sample b = simulate_sample(rho, bases, 400, 77);
  const Sample c = simulate_sample(rho, bases, 400, 78);
  CHECK(sample_records_csv(a) == sample_records_csv(b));
  CHECK(a.records() == b.records());
  CHECK(a.counts() != c.counts());
}

TEST_CASE("simulated frequencies obey the CLT bound at m = 1e6") {
  for (int dim : {2, 3}) {
    const auto bases = mub_ptr(dim);
    std::mt19937_64 rng(dim);
    const Vector theta = oracle::random_physical_theta(dim, rng);
    const auto rho = bloch_to_density(BlochVector(theta), cached_generators(dim));
    const int m = 1000000;
    const Sample s = simulate_sample(rho, bases, m, 2024);
    for (int r = 0; r < bases->size(); ++r) {
      const double mr = s.basis_total(r);
      for (int i = 0; i < dim; ++i) {
        const double p = oracle::born(oracle::density(theta), (*bases)[r].vectors.col(i));
        CHECK(std::abs(s.counts()(r, i) / mr - p) <= 4.0 * std::sqrt(p * (1.0 - p) / mr));
      }
    }
  }
}

TEST_CASE("aggregate chi-squared goodness of fit over 100 seeds") {
  const auto bases = mub_ptr(3);
  std::mt19937_64 rng(99);
  const Vector theta = oracle::random_physical_theta(3, rng);
  const auto rho = bloch_to_density(BlochVector(theta), cached_generators(3));
  const int m = 3000;
  double stat = 0.0;
  int df = 0;
  for (RngSeed seed = 0; seed < 100; ++seed) {
    const Sample s = simulate_sample(rho, bases, m, seed);
    for (int r = 0; r < bases->size(); ++r) {
      const double mr = s.basis_total(r);
      for (int i = 0; i < 3; ++i) {
        const double e = mr * oracle::born(oracle::density(theta), (*bases)[r].vectors.col(i));
        stat += (s.counts()(r, i) - e) * (s.counts()(r, i) - e) / e;
      }
      df += 2;
    }
  }
  const double p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), stat));
  CHECK(p_value > 0.001);
}

TEST_CASE("expected_sample carries exact frequencies") {
  const auto bases = mub_ptr(2);
  const Sample s = expected_sample(spin_half(), bases, 300.0);
  CHECK(s.total() == doctest::Approx(300.0));
  CHECK(s.records().empty());
  CHECK(s.counts()(0, 0) == doctest::Approx(100.0 * 0.595));
}

TEST_CASE("Sample validation") {
  const auto bases = mub_ptr(2);
  CHECK_THROWS_AS(Sample(bases, Matrix::Zero(2, 2)), InvalidArgument);
  Matrix neg = Matrix::Zero(3, 2);
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(Sample(bases, neg), InvalidArgument);
  Matrix counts = Matrix::Zero(3, 2);
  counts(0, 0) = 1.0;
  CHECK_THROWS_AS(Sample(bases, counts, {ObservationRecord{1, 1}}), InvalidArgument);
  CHECK_THROWS_AS(Sample::from_records(bases, {ObservationRecord{0, 3}}), InvalidArgument);
  const Sample ok = Sample::from_records(bases, {ObservationRecord{0, 1}, ObservationRecord{2, 2}});
  CHECK(ok.counts()(0, 0) == 1.0);
  CHECK(ok.counts()(2, 1) == 1.0);
}
