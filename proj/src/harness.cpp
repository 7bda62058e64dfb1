#include "qtomo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace qtomo {

void McConfig::validate() const {
  require(bases != nullptr, "McConfig: basis set required");
  require(rho0.dim() == bases->dim(), "McConfig: state and bases differ in dimension");
  require(is_physical(rho0), "McConfig: true state is not physical");
  require(q >= 1, "McConfig: q must be at least 1");
  require(m >= bases->size(), "McConfig: m must be at least the number of bases");
  require(threads >= 0, "McConfig: threads must be non-negative");
  estimation.validate();
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QTOMO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

Replication run_one(const McConfig& cfg, int j) {
  Replication rep;
  rep.index = j;
  rep.seed = cfg.base_seed + static_cast<RngSeed>(j);
  try {
    const Sample sample = simulate_sample(cfg.rho0, cfg.bases, cfg.m, rep.seed);
    EstimationConfig ecfg = cfg.estimation;
    ecfg.seed = rep.seed;
    rep.result = estimate(sample, ecfg);
    if (rep.result.converged && rep.result.physical) {
      try {
        const auto fisher = observed_fisher_hessian(rep.result.theta_hat, sample);
        rep.covariance = asymptotic_covariance(fisher, cfg.covariance_scaling);
        rep.has_covariance = true;
      } catch (const NumericalError& e) {
        rep.error = e.what();
      }
    }
  } catch (const std::exception& e) {
    rep.result.converged = false;
    rep.result.physical = false;
    rep.error = e.what();
  }
  return rep;
}

}  // namespace

std::vector<Replication> run_monte_carlo(const McConfig& cfg) {
  cfg.validate();
  std::vector<Replication> out(cfg.q);
  const int workers = std::min(worker_count(cfg.threads), cfg.q);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int j = next++; j < cfg.q; j = next++) out[j] = run_one(cfg, j);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

FilterOutcome filter_physical(const std::vector<Replication>& results) {
  FilterOutcome out;
  out.total = static_cast<int>(results.size());
  for (const auto& r : results) {
    const bool has_estimate = r.result.theta_hat.size() > 0;
    if (!r.result.converged) ++out.unconverged;
    if (has_estimate && !r.result.physical) ++out.unphysical;
    if (r.result.converged && r.result.physical) out.retained.push_back(r);
  }
  if (out.retained.empty()) throw NumericalError("filter_physical: every replication was filtered out");
  return out;
}

const SummaryRow& McSummary::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw InvalidArgument("McSummary: no row named " + name);
}

namespace {

struct Quantity {
  std::string name;
  double truth = 0.0;
  std::vector<double> values;
  std::vector<double> ses;
};

double median(std::vector<double> v) { return empirical_quantile(std::move(v), 0.5); }

// Value and (if available) asymptotic se of every tracked quantity for one replication.
std::vector<std::pair<double, double>> evaluate_quantities(const Replication& rep, const GeneratorSet& gens) {
  const int dim = gens.dim;
  const int n = gens.count();
  std::vector<std::pair<double, double>> out;
  const auto& theta = rep.result.theta_hat.theta;
  const double nan = std::nan("");
  for (int j = 0; j < n; ++j)
    out.emplace_back(theta[j], rep.has_covariance ? std::sqrt(std::max(rep.covariance.sigma(j, j), 0.0)) : nan);
  for (int i = 0; i < dim; ++i) {
    const double se = rep.has_covariance
                          ? std::sqrt(std::max(delta_method_variance(diagonal_gradient(i, gens), rep.covariance), 0.0))
                          : nan;
    out.emplace_back(rep.result.rho_hat.rho(i, i).real(), se);
  }
  const auto ed = hermitian_eigen(rep.result.rho_hat);
  Matrix grads;
  bool have_grads = false;
  if (rep.has_covariance) {
    try {
      grads = eigenvalue_gradient(rep.result.rho_hat, gens);
      have_grads = true;
    } catch (const NumericalError&) {
    }
  }
  for (int i = 0; i < dim; ++i) {
    const double se =
        have_grads ? std::sqrt(std::max(delta_method_variance(grads.row(i).transpose(), rep.covariance), 0.0)) : nan;
    out.emplace_back(ed.eigenvalues[i], se);
  }
  return out;
}

}  // namespace

McSummary summarize(const std::vector<Replication>& results, const DensityMatrix& rho0,
                    const SummaryOptions& options) {
  require(results.size() >= 2, "summarize: at least two results required");
  const int dim = rho0.dim();
  const auto& gens = cached_generators(dim);
  const BlochVector theta0 = density_to_bloch(rho0, gens);
  const auto eig0 = hermitian_eigen(rho0);

  std::vector<Quantity> qs;
  for (int j = 0; j < gens.count(); ++j) qs.push_back({"theta" + std::to_string(j + 1), theta0[j], {}, {}});
  for (int i = 0; i < dim; ++i)
    qs.push_back({"rho" + std::to_string(i + 1) + std::to_string(i + 1), rho0.rho(i, i).real(), {}, {}});
  for (int i = 0; i < dim; ++i) qs.push_back({"delta" + std::to_string(i + 1), eig0.eigenvalues[i], {}, {}});

  std::vector<std::vector<std::pair<double, double>>> per_rep;
  per_rep.reserve(results.size());
  std::vector<int> with_cov;
  for (std::size_t r = 0; r < results.size(); ++r) {
    per_rep.push_back(evaluate_quantities(results[r], gens));
    if (results[r].has_covariance) with_cov.push_back(static_cast<int>(r));
    for (std::size_t k = 0; k < qs.size(); ++k) {
      qs[k].values.push_back(per_rep.back()[k].first);
      if (std::isfinite(per_rep.back()[k].second)) qs[k].ses.push_back(per_rep.back()[k].second);
    }
  }

  McSummary summary;
  summary.total = static_cast<int>(results.size());
  summary.retained = summary.total;
  if (!with_cov.empty()) {
    Rng rng(options.asymptotic_seed);
    std::uniform_int_distribution<std::size_t> pick(0, with_cov.size() - 1);
    summary.asymptotic_index = with_cov[pick(rng)];
  }

  const double q = static_cast<double>(results.size());
  for (std::size_t k = 0; k < qs.size(); ++k) {
    const auto& quantity = qs[k];
    SummaryRow row;
    row.name = quantity.name;
    row.truth = quantity.truth;
    double sum = 0.0;
    for (double v : quantity.values) sum += v;
    row.mean = sum / q;
    row.bias = row.mean - row.truth;
    double var = 0.0;
    double mse = 0.0;
    for (double v : quantity.values) {
      var += (v - row.mean) * (v - row.mean);
      mse += (v - row.truth) * (v - row.truth);
    }
    row.std = std::sqrt(var / q);
    row.rmse = std::sqrt(mse / q);
    row.median = median(quantity.values);
    row.q025 = empirical_quantile(quantity.values, 0.025);
    row.q975 = empirical_quantile(quantity.values, 0.975);
    if (!quantity.ses.empty()) row.median_asymptotic_se = median(quantity.ses);
    if (summary.asymptotic_index >= 0) {
      const auto& [value, se] = per_rep[summary.asymptotic_index][k];
      if (std::isfinite(se)) {
        row.asymptotic_available = true;
        row.asymptotic_estimate = value;
        row.asymptotic_se = se;
        row.asymptotic_ci = confidence_interval(value, se, 0.95);
      }
    }
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

RejectionSummary rejection_summary(const std::vector<double>& statistics, TestKind kind, int df) {
  RejectionSummary out;
  out.count = static_cast<int>(statistics.size());
  out.critical_value = kind == TestKind::kT ? kTCriticalValue : wald_critical_value(df);
  if (statistics.empty()) return out;
  int rejected = 0;
  for (double s : statistics)
    if (kind == TestKind::kT ? std::abs(s) > out.critical_value : s > out.critical_value) ++rejected;
  out.rejection_rate = static_cast<double>(rejected) / out.count;
  if (kind == TestKind::kT) {
    out.finite_lower = empirical_quantile(statistics, 0.025);
    out.finite_upper = empirical_quantile(statistics, 0.975);
  } else {
    out.finite_upper = empirical_quantile(statistics, 0.95);
  }
  return out;
}

SizePowerReport test_size_power(const std::vector<Replication>& results, const HypothesisSpec& spec) {
  require(!spec.coords.empty(), "test_size_power: no tested coordinates");
  require(spec.truth.size() == static_cast<Eigen::Index>(spec.coords.size()) &&
              spec.alternative.size() == spec.truth.size(),
          "test_size_power: null values must match the tested coordinates");
  require(spec.kind == TestKind::kWald || spec.coords.size() == 1, "test_size_power: t tests one coordinate");
  SizePowerReport report;
  report.name = spec.name;
  report.kind = spec.kind;
  report.df = static_cast<int>(spec.coords.size());
  std::vector<double> under_truth;
  std::vector<double> under_alternative;
  for (const auto& rep : results) {
    if (!rep.has_covariance) {
      ++report.skipped;
      continue;
    }
    const auto& gens = cached_generators(rep.result.rho_hat.dim());
    Vector value(spec.coords.size());
    AsymptoticCovariance sigma;
    try {
      if (spec.target == TargetQuantity::kTheta) {
        for (std::size_t a = 0; a < spec.coords.size(); ++a) value[a] = rep.result.theta_hat[spec.coords[a]];
        sigma = restrict_covariance(rep.covariance, spec.coords);
      } else {
        const auto ed = hermitian_eigen(rep.result.rho_hat);
        const Matrix grads = eigenvalue_gradient(rep.result.rho_hat, gens);
        Matrix g(spec.coords.size(), grads.cols());
        for (std::size_t a = 0; a < spec.coords.size(); ++a) {
          value[a] = ed.eigenvalues[spec.coords[a]];
          g.row(a) = grads.row(spec.coords[a]);
        }
        sigma.sigma = g * rep.covariance.sigma * g.transpose();
      }
      if (spec.kind == TestKind::kT) {
        const double se = std::sqrt(sigma.sigma(0, 0));
        under_truth.push_back(t_statistic(value[0], spec.truth[0], se).statistic);
        under_alternative.push_back(t_statistic(value[0], spec.alternative[0], se).statistic);
      } else {
        under_truth.push_back(wald_statistic(value - spec.truth, sigma).statistic);
        under_alternative.push_back(wald_statistic(value - spec.alternative, sigma).statistic);
      }
    } catch (const std::exception&) {
      ++report.skipped;
    }
  }
  report.size = rejection_summary(under_truth, spec.kind, report.df);
  report.power = rejection_summary(under_alternative, spec.kind, report.df);
  return report;
}

double relative_efficiency(double std_a, double std_b) {
  require(std_a > 0.0 && std_b > 0.0, "relative_efficiency: standard deviations must be positive");
  return (std_b * std_b) / (std_a * std_a);
}

}  // namespace qtomo
