#include "qtomo/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace qtomo {

Sample::Sample(std::shared_ptr<const BasisSet> bases, Matrix counts,
               std::vector<ObservationRecord> records)
    : bases_(std::move(bases)), counts_(std::move(counts)), records_(std::move(records)) {
  require(bases_ != nullptr, "Sample: basis set required");
  require(counts_.rows() == bases_->size() && counts_.cols() == bases_->dim(),
          "Sample: counts shape must be (bases x outcomes)");
  require(counts_.minCoeff() >= 0.0, "Sample: counts must be non-negative");
  total_ = counts_.sum();
  if (!records_.empty()) {
    Matrix tally = Matrix::Zero(counts_.rows(), counts_.cols());
    for (const auto& rec : records_) {
      require(rec.basis >= 0 && rec.basis < counts_.rows(), "Sample: record basis out of range");
      require(rec.outcome >= 1 && rec.outcome <= counts_.cols(), "Sample: record outcome out of range");
      tally(rec.basis, rec.outcome - 1) += 1.0;
    }
    require(tally == counts_, "Sample: counts inconsistent with records");
  }
}

Sample Sample::from_records(std::shared_ptr<const BasisSet> bases,
                            std::vector<ObservationRecord> records) {
  require(bases != nullptr, "Sample: basis set required");
  Matrix counts = Matrix::Zero(bases->size(), bases->dim());
  for (const auto& rec : records) {
    require(rec.basis >= 0 && rec.basis < counts.rows(), "Sample: record basis out of range");
    require(rec.outcome >= 1 && rec.outcome <= counts.cols(), "Sample: record outcome out of range");
    counts(rec.basis, rec.outcome - 1) += 1.0;
  }
  return Sample(std::move(bases), std::move(counts), std::move(records));
}

std::vector<int> allocate_counts(int m, int n_bases) {
  require(n_bases > 0, "allocate_counts: need at least one basis");
  require(m >= n_bases, "allocate_counts: m must be at least the number of bases");
  std::vector<int> out(n_bases, m / n_bases);
  for (int r = 0; r < m % n_bases; ++r) ++out[r];
  return out;
}

std::vector<int> multinomial_draw(const Vector& p, int n, Rng& rng) {
  require(n >= 0, "multinomial_draw: n must be non-negative");
  require(p.size() > 0 && p.minCoeff() >= 0.0, "multinomial_draw: probabilities must be non-negative");
  require(std::abs(p.sum() - 1.0) <= 1e-10, "multinomial_draw: probabilities not normalized");
  const auto k = static_cast<int>(p.size());
  std::vector<int> counts(k, 0);
  int remaining = n;
  double mass = 1.0;
  // Sequential conditional binomials: c_i ~ Bin(remaining, p_i / mass_left).
  for (int i = 0; i + 1 < k && remaining > 0; ++i) {
    const double cond = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<int> binom(remaining, cond);
    counts[i] = binom(rng);
    remaining -= counts[i];
    mass -= p[i];
  }
  counts[k - 1] += remaining;
  return counts;
}

std::vector<int> multinomial_draw(const Vector& p, int n, RngSeed seed) {
  Rng rng(seed);
  return multinomial_draw(p, n, rng);
}

Sample simulate_sample(const DensityMatrix& rho0, std::shared_ptr<const BasisSet> bases, int m,
                       RngSeed seed) {
  require(bases != nullptr, "simulate_sample: basis set required");
  require(is_physical(rho0), "simulate_sample: true state is not physical");
  const auto per_basis = allocate_counts(m, bases->size());
  Rng rng(seed);
  Matrix counts = Matrix::Zero(bases->size(), bases->dim());
  std::vector<ObservationRecord> records;
  records.reserve(m);
  for (int r = 0; r < bases->size(); ++r) {
    Vector p = born_probabilities(rho0, (*bases)[r]);
    p /= p.sum();
    const auto drawn = multinomial_draw(p, per_basis[r], rng);
    for (int i = 0; i < bases->dim(); ++i) {
      counts(r, i) = drawn[i];
      records.insert(records.end(), drawn[i], ObservationRecord{r, i + 1});
    }
  }
  return Sample(std::move(bases), std::move(counts), std::move(records));
}

Sample expected_sample(const DensityMatrix& rho0, std::shared_ptr<const BasisSet> bases, double m) {
  require(bases != nullptr, "expected_sample: basis set required");
  require(m > 0.0, "expected_sample: m must be positive");
  Matrix counts(bases->size(), bases->dim());
  const double per_basis = m / bases->size();
  for (int r = 0; r < bases->size(); ++r)
    counts.row(r) = per_basis * born_probabilities(rho0, (*bases)[r]).transpose();
  return Sample(std::move(bases), std::move(counts));
}

}  // namespace qtomo
