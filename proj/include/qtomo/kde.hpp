#pragma once

#include <vector>

namespace qtomo {

struct KdeEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Normal-reference bandwidth 1.06 * min(std, IQR / 1.349) * n^(-1/5).
double kde_bandwidth(const std::vector<double>& samples);

/// Gaussian-kernel density on `points` (>= 512) equally spaced points over
/// [min - padding h, max + padding h]. padding must be at least 3; the default
/// of 4 keeps the truncated tail mass below 1e-4 even for two samples.
KdeEstimate kde(const std::vector<double>& samples, int points = 512, double padding = 4.0);

/// Type 7 (linear interpolation) empirical quantile, p in [0, 1].
double empirical_quantile(std::vector<double> values, double p);

/// Trapezoidal integral of the density over its grid.
double trapezoid_integral(const KdeEstimate& estimate);

}  // namespace qtomo
