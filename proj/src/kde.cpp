#include "qtomo/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qtomo/types.hpp"

namespace qtomo {

double empirical_quantile(std::vector<double> values, double p) {
  require(!values.empty(), "empirical_quantile: no values");
  require(p >= 0.0 && p <= 1.0, "empirical_quantile: p must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double kde_bandwidth(const std::vector<double>& samples) {
  require(samples.size() >= 2, "kde: at least two samples required");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = empirical_quantile(samples, 0.75) - empirical_quantile(samples, 0.25);
  double sigma = sd;
  if (iqr > 0.0) sigma = std::min(sd, iqr / 1.349);
  require(sigma > 0.0, "kde: samples have zero spread");
  return 1.06 * sigma * std::pow(n, -0.2);
}

KdeEstimate kde(const std::vector<double>& samples, int points, double padding) {
  require(points >= 512, "kde: grid must have at least 512 points");
  require(padding >= 3.0, "kde: padding must be at least 3 bandwidths");
  KdeEstimate out;
  out.bandwidth = kde_bandwidth(samples);
  const double h = out.bandwidth;
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it - padding * h;
  const double hi = *hi_it + padding * h;
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  out.grid.resize(points);
  out.density.resize(points);
  for (int g = 0; g < points; ++g) {
    const double x = lo + (hi - lo) * g / (points - 1);
    double sum = 0.0;
    for (double xi : samples) {
      const double u = (x - xi) / h;
      sum += std::exp(-0.5 * u * u);
    }
    out.grid[g] = x;
    out.density[g] = norm * sum;
  }
  return out;
}

double trapezoid_integral(const KdeEstimate& estimate) {
  double total = 0.0;
  for (std::size_t g = 1; g < estimate.grid.size(); ++g)
    total += 0.5 * (estimate.density[g] + estimate.density[g - 1]) * (estimate.grid[g] - estimate.grid[g - 1]);
  return total;
}

}  // namespace qtomo
