#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "qtomo/measurement.hpp"

namespace qtomo {

/// Seeds are plain 64-bit words; replication j of a run uses base_seed + j.
using RngSeed = std::uint64_t;
using Rng = std::mt19937_64;
inline constexpr const char* kRngAlgorithm = "mt19937_64";

/// One measurement: which basis was used (0-based) and which outcome was seen (1-based).
struct ObservationRecord {
  int basis = 0;
  int outcome = 1;

  bool operator==(const ObservationRecord&) const = default;
};

/// Outcome counts c_{r,i} per basis, optionally with the individual records.
///
/// Counts may be fractional (frequency-weighted samples built from exact Born
/// probabilities); such samples carry no records.
class Sample {
 public:
  Sample() = default;
  Sample(std::shared_ptr<const BasisSet> bases, Matrix counts,
         std::vector<ObservationRecord> records = {});

  static Sample from_records(std::shared_ptr<const BasisSet> bases,
                             std::vector<ObservationRecord> records);

  const BasisSet& bases() const { return *bases_; }
  const std::shared_ptr<const BasisSet>& bases_ptr() const { return bases_; }
  const Matrix& counts() const { return counts_; }
  const std::vector<ObservationRecord>& records() const { return records_; }
  double total() const { return total_; }
  double basis_total(int r) const { return counts_.row(r).sum(); }

 private:
  std::shared_ptr<const BasisSet> bases_;
  Matrix counts_;
  std::vector<ObservationRecord> records_;
  double total_ = 0.0;
};

/// Even split of m over the bases, remainder to the lowest indices.
std::vector<int> allocate_counts(int m, int n_bases);

std::vector<int> multinomial_draw(const Vector& p, int n, Rng& rng);
std::vector<int> multinomial_draw(const Vector& p, int n, RngSeed seed);

Sample simulate_sample(const DensityMatrix& rho0, std::shared_ptr<const BasisSet> bases, int m,
                       RngSeed seed);

/// Sample whose counts equal m_r * p_i^r(rho0) exactly (non-integer in general).
Sample expected_sample(const DensityMatrix& rho0, std::shared_ptr<const BasisSet> bases, double m);

}  // namespace qtomo
