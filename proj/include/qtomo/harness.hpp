#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qtomo/inference.hpp"
#include "qtomo/kde.hpp"
#include "qtomo/sampling.hpp"

namespace qtomo {

struct McConfig {
  DensityMatrix rho0;
  std::shared_ptr<const BasisSet> bases;
  int m = 100;
  int q = 1000;
  RngSeed base_seed = 1;
  bool filter_unphysical = true;
  EstimationConfig estimation;
  CovarianceScaling covariance_scaling = CovarianceScaling::kTotalInformation;
  /// 0 means QTOMO_THREADS if set, else the hardware concurrency.
  int threads = 0;

  void validate() const;
};

/// One replication: the sample seed, the estimate and (when the estimate is
/// interior) its own asymptotic covariance.
struct Replication {
  int index = 0;
  RngSeed seed = 0;
  EstimationResult result;
  bool has_covariance = false;
  AsymptoticCovariance covariance;
  std::string error;
};

/// Worker count from QTOMO_THREADS (if set and positive) or the hardware.
int worker_count(int requested = 0);

/// Replication j samples with seed base_seed + j and estimates with the same
/// seed for its random starts. Deterministic regardless of thread count.
std::vector<Replication> run_monte_carlo(const McConfig& cfg);

/// Retained = converged and physical. The two rejection counts overlap: an
/// unconverged replication whose estimate is unphysical counts in both.
struct FilterOutcome {
  std::vector<Replication> retained;
  int total = 0;
  int unphysical = 0;
  int unconverged = 0;

  int retained_count() const { return static_cast<int>(retained.size()); }
  /// Fraction of replications dropped by the filter.
  double filtered_fraction() const {
    return total > 0 ? 1.0 - static_cast<double>(retained.size()) / total : 0.0;
  }
};

/// Keeps converged results with physical estimates; throws if none remain.
FilterOutcome filter_physical(const std::vector<Replication>& results);

struct SummaryOptions {
  /// Sub-seed choosing the replication that supplies the asymptotic row.
  RngSeed asymptotic_seed = 0x5eed;
};

struct SummaryRow {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double std = 0.0;
  double rmse = 0.0;
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  /// Asymptotic row from the selected replication.
  bool asymptotic_available = false;
  double asymptotic_estimate = 0.0;
  double asymptotic_se = 0.0;
  Interval asymptotic_ci;
  /// Median over replications of the per-replication asymptotic se.
  double median_asymptotic_se = 0.0;
};

struct McSummary {
  std::vector<SummaryRow> rows;
  int total = 0;
  int retained = 0;
  int asymptotic_index = -1;

  const SummaryRow& row(const std::string& name) const;
};

/// Rows theta1.., rho11.., delta1.. (eigenvalues descending) with bias, std
/// (divisor q), RMSE and the 2.5%/97.5% empirical quantiles.
McSummary summarize(const std::vector<Replication>& results, const DensityMatrix& rho0,
                    const SummaryOptions& options = {});

enum class TargetQuantity { kTheta, kEigenvalue };

/// Hypotheses on theta coordinates or eigenvalues (zero-based indices).
/// Size tests null = truth; power tests null = alternative.
struct HypothesisSpec {
  std::string name;
  TestKind kind = TestKind::kT;
  TargetQuantity target = TargetQuantity::kTheta;
  std::vector<int> coords;
  Vector truth;
  Vector alternative;
};

struct RejectionSummary {
  int count = 0;
  double rejection_rate = 0.0;
  double critical_value = 0.0;
  /// Finite-sample critical values: 2.5%/97.5% quantiles (t) or the 95% quantile (Wald, upper only).
  double finite_lower = 0.0;
  double finite_upper = 0.0;
};

/// Rejection fraction of a statistic list against the asymptotic critical value.
RejectionSummary rejection_summary(const std::vector<double>& statistics, TestKind kind, int df);

struct SizePowerReport {
  std::string name;
  TestKind kind = TestKind::kT;
  int df = 1;
  RejectionSummary size;
  RejectionSummary power;
  int skipped = 0;
};

SizePowerReport test_size_power(const std::vector<Replication>& results, const HypothesisSpec& spec);

/// sigma_b^2 / sigma_a^2.
double relative_efficiency(double std_a, double std_b);

}  // namespace qtomo
