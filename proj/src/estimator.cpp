#include "qtomo/estimator.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "qtomo/solvers.hpp"

namespace qtomo {

Vector LagrangianState::pack() const {
  Vector t(theta.size() + lambda.size() + gamma.size());
  t << theta.theta, lambda, gamma;
  return t;
}

LagrangianState LagrangianState::unpack(const Vector& t, int params, int constraints) {
  require(t.size() == params + 2 * constraints, "LagrangianState: packed length mismatch");
  LagrangianState s;
  s.theta = BlochVector(t.head(params));
  s.lambda = t.segment(params, constraints);
  s.gamma = t.tail(constraints);
  return s;
}

LagrangianState initial_state(const BlochVector& theta) {
  const int dim = theta.size() == 3 ? 2 : theta.size() == 8 ? 3 : 0;
  require(dim != 0, "initial_state: theta must have length 3 or 8");
  const auto coeffs = char_poly_coefficients(theta, cached_structure_constants(dim));
  LagrangianState s;
  s.theta = theta;
  s.lambda = Vector::Zero(dim - 1);
  s.gamma.resize(dim - 1);
  for (int j = 0; j < dim - 1; ++j) s.gamma[j] = std::sqrt(std::max(coeffs.values[j + 1], 1e-6));
  return s;
}

void EstimationConfig::validate() const {
  require(residual_tolerance > 0.0 && likelihood_tolerance > 0.0, "EstimationConfig: tolerances must be positive");
  require(max_newton_iters > 0 && max_backtracks > 0 && bfgs_max_iters > 0,
          "EstimationConfig: iteration budgets must be positive");
  require(annealing_steps > 0, "EstimationConfig: annealing_steps must be positive");
  require(annealing_initial_fraction > 0.0, "EstimationConfig: annealing temperature must be positive");
  require(annealing_decay > 0.0 && annealing_decay < 1.0, "EstimationConfig: annealing decay must be in (0,1)");
  require(multistart_count > 0, "EstimationConfig: multistart_count must be positive");
}

std::string to_string(EstimationMethod method) {
  switch (method) {
    case EstimationMethod::kNewton: return "NEWTON";
    case EstimationMethod::kBfgsAnnealing: return "BFGS_SA";
    case EstimationMethod::kMethodOfMoments: return "MM";
  }
  return "UNKNOWN";
}

namespace {

class LagrangianProblem {
 public:
  explicit LagrangianProblem(const Sample& sample)
      : model_(sample), sc_(model_.structure()), n_(model_.params()), k_(model_.dim() - 1) {}

  const LikelihoodModel& model() const { return model_; }
  int params() const { return n_; }
  int constraints() const { return k_; }

  Vector residual(const Vector& t, double floor) const {
    const BlochVector theta(t.head(n_));
    const auto lambda = t.segment(n_, k_);
    const auto gamma = t.tail(k_);
    const Vector c = char_poly_coefficients(theta, sc_).values;
    const Matrix grads = char_poly_gradients(theta, sc_);
    Vector h(n_ + 2 * k_);
    h.head(n_) = model_.score(theta.theta, floor) + grads * lambda;
    for (int j = 0; j < k_; ++j) {
      h[n_ + j] = c[j + 1] - gamma[j] * gamma[j];
      h[n_ + k_ + j] = 2.0 * lambda[j] * gamma[j];
    }
    return h;
  }

  Matrix jacobian(const Vector& t, double floor) const {
    const BlochVector theta(t.head(n_));
    const auto lambda = t.segment(n_, k_);
    const auto gamma = t.tail(k_);
    const Matrix grads = char_poly_gradients(theta, sc_);
    Matrix jac = Matrix::Zero(n_ + 2 * k_, n_ + 2 * k_);
    Matrix top = model_.hessian(theta.theta, floor);
    for (int j = 0; j < k_; ++j) top += lambda[j] * char_poly_hessian(j + 2, theta, sc_);
    jac.topLeftCorner(n_, n_) = top;
    jac.block(0, n_, n_, k_) = grads;
    jac.block(n_, 0, k_, n_) = grads.transpose();
    for (int j = 0; j < k_; ++j) {
      jac(n_ + j, n_ + k_ + j) = -2.0 * gamma[j];
      jac(n_ + k_ + j, n_ + j) = 2.0 * gamma[j];
      jac(n_ + k_ + j, n_ + k_ + j) = 2.0 * lambda[j];
    }
    return jac;
  }

  ResidualSystem system(const EstimationConfig& cfg) const {
    ResidualSystem sys;
    sys.residual = [this](const Vector& t) { return residual(t, kProbabilityFloor); };
    sys.jacobian = [this](const Vector& t) { return jacobian(t, kProbabilityFloor); };
    sys.project = [this](Vector& t) { t.segment(n_, k_) = t.segment(n_, k_).cwiseMax(0.0); };
    const double ltol = cfg.likelihood_tolerance;
    sys.accept = [this, ltol](const Vector& current, const Vector& previous) {
      if (!(model_.min_observed_probability(current.head(n_)) > kProbabilityFloor)) return false;
      const double now = model_.log_likelihood(current.head(n_), kProbabilityFloor);
      const double before = model_.log_likelihood(previous.head(n_), kProbabilityFloor);
      return std::abs(now - before) <= ltol;
    };
    return sys;
  }

  EstimationResult result(const SolveReport& report, EstimationMethod method) const {
    EstimationResult r;
    r.state = LagrangianState::unpack(report.t, n_, k_);
    r.theta_hat = r.state.theta;
    r.rho_hat = bloch_to_density(r.theta_hat, model_.generators());
    r.physical = is_physical(r.rho_hat);
    r.converged = report.converged;
    r.method = method;
    r.scaled_loglik = model_.log_likelihood(r.theta_hat.theta, kProbabilityFloor);
    r.residual_norm = std::sqrt(report.sum_of_squares);
    r.iterations = report.iterations;
    r.singular_jacobian = report.singular;
    r.starts_tried = 1;
    return r;
  }

 private:
  LikelihoodModel model_;
  const StructureConstants& sc_;
  int n_;
  int k_;
};

int constraints_for(const Sample& sample) { return sample.bases().dim() - 1; }

EstimationResult newton_on(const LagrangianProblem& problem, const LagrangianState& t0,
                           const EstimationConfig& cfg) {
  NewtonOptions opts;
  opts.residual_tolerance = cfg.residual_tolerance;
  opts.max_iterations = cfg.max_newton_iters;
  opts.max_backtracks = cfg.max_backtracks;
  const auto report = newton_root(problem.system(cfg), t0.pack(), opts);
  auto r = problem.result(report, EstimationMethod::kNewton);
  if (report.singular) r.diagnostics = "singular Jacobian";
  else if (!report.converged) r.diagnostics = "Newton did not converge";
  return r;
}

EstimationResult bfgs_on(const LagrangianProblem& problem, const LagrangianState& t0,
                         const EstimationConfig& cfg, std::uint64_t seed) {
  AnnealingOptions opts;
  opts.residual_tolerance = cfg.residual_tolerance;
  opts.max_iterations = cfg.bfgs_max_iters;
  opts.max_backtracks = cfg.max_backtracks;
  opts.annealing_steps = cfg.annealing_steps;
  opts.initial_temperature_fraction = cfg.annealing_initial_fraction;
  opts.temperature_decay = cfg.annealing_decay;
  opts.seed = seed;
  const auto report = bfgs_anneal(problem.system(cfg), t0.pack(), opts);
  auto r = problem.result(report, EstimationMethod::kBfgsAnnealing);
  if (!report.converged) r.diagnostics = "BFGS budget exhausted";
  return r;
}

void check_state(const LagrangianState& t, const Sample& sample) {
  const int k = constraints_for(sample);
  require(t.theta.size() == sample.bases().dim() * sample.bases().dim() - 1,
          "LagrangianState: theta length does not match the sample dimension");
  require(t.lambda.size() == k && t.gamma.size() == k, "LagrangianState: multiplier/slack length mismatch");
  require(t.pack().allFinite(), "LagrangianState: entries must be finite");
}

}  // namespace

double log_likelihood(const BlochVector& theta, const Sample& sample) {
  return LikelihoodModel(sample).log_likelihood(theta.theta);
}

Vector score(const BlochVector& theta, const Sample& sample) {
  return LikelihoodModel(sample).score(theta.theta);
}

Vector lagrangian_residual(const LagrangianState& t, const Sample& sample) {
  check_state(t, sample);
  return LagrangianProblem(sample).residual(t.pack(), 0.0);
}

Matrix lagrangian_jacobian(const LagrangianState& t, const Sample& sample) {
  check_state(t, sample);
  return LagrangianProblem(sample).jacobian(t.pack(), 0.0);
}

EstimationResult newton_solve(const LagrangianState& t0, const Sample& sample, const EstimationConfig& cfg) {
  cfg.validate();
  check_state(t0, sample);
  return newton_on(LagrangianProblem(sample), t0, cfg);
}

EstimationResult bfgs_sa_solve(const LagrangianState& t0, const Sample& sample, const EstimationConfig& cfg) {
  cfg.validate();
  check_state(t0, sample);
  return bfgs_on(LagrangianProblem(sample), t0, cfg, cfg.seed);
}

BlochVector shrink_to_admissible(const BlochVector& theta, double margin) {
  const int dim = theta.size() == 3 ? 2 : theta.size() == 8 ? 3 : 0;
  require(dim != 0, "shrink_to_admissible: theta must have length 3 or 8");
  const auto& sc = cached_structure_constants(dim);
  const auto inside = [&](double s) { return is_admissible(BlochVector(s * theta.theta), sc); };
  if (inside(1.0)) return theta;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return BlochVector(margin * lo * theta.theta);
}

MomentEstimate tomographic_inversion(const Sample& sample) {
  const LikelihoodModel model(sample);
  const int dim = model.dim();
  std::vector<int> rows;
  Vector target(model.cells());
  for (int r = 0; r < sample.bases().size(); ++r) {
    const double total = sample.basis_total(r);
    if (total <= 0.0) continue;
    for (int i = 0; i < dim; ++i) {
      rows.push_back(r * dim + i);
      target[static_cast<int>(rows.size()) - 1] = sample.counts()(r, i) / total - 1.0 / dim;
    }
  }
  Matrix a(rows.size(), model.params());
  for (std::size_t k = 0; k < rows.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = model.design().row(rows[k]);
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < model.params())
    throw NumericalError("tomographic_inversion: basis set does not span the Bloch coordinates");
  MomentEstimate out;
  out.theta = BlochVector(qr.solve(target.head(static_cast<Eigen::Index>(rows.size()))));
  out.admissible = is_admissible(out.theta, model.structure());
  return out;
}

EstimationResult moment_result(const Sample& sample) {
  const LikelihoodModel model(sample);
  const auto mm = tomographic_inversion(sample);
  EstimationResult r;
  r.theta_hat = mm.theta;
  r.rho_hat = bloch_to_density(mm.theta, model.generators());
  r.physical = is_physical(r.rho_hat);
  r.converged = true;
  r.method = EstimationMethod::kMethodOfMoments;
  r.scaled_loglik = model.log_likelihood(mm.theta.theta, kProbabilityFloor);
  r.state = initial_state(mm.theta);
  r.starts_tried = 0;
  if (!mm.admissible) r.diagnostics = "moment estimate is not admissible";
  return r;
}

std::vector<BlochVector> multistart_points(const Sample& sample, const EstimationConfig& cfg) {
  const int dim = sample.bases().dim();
  const int n = dim * dim - 1;
  const auto& sc = cached_structure_constants(dim);
  const LikelihoodModel model(sample);
  std::vector<BlochVector> starts;
  starts.emplace_back(Vector::Zero(n));
  if (cfg.multistart_count >= 2) {
    try {
      starts.push_back(shrink_to_admissible(tomographic_inversion(sample).theta));
    } catch (const NumericalError&) {
      // Incomplete basis set: no moment start.
    }
  }
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double radius = std::sqrt(2.0 * (dim - 1) / dim);
  int attempts = 0;
  while (static_cast<int>(starts.size()) < cfg.multistart_count && attempts < 10000) {
    ++attempts;
    Vector v(n);
    for (int j = 0; j < n; ++j) v[j] = normal(rng);
    v *= radius * std::pow(uniform(rng), 1.0 / n) / v.norm();
    BlochVector candidate(0.9 * v);
    if (!is_admissible(candidate, sc)) continue;
    if (!(model.min_observed_probability(candidate.theta) > kProbabilityFloor)) continue;
    starts.push_back(std::move(candidate));
  }
  return starts;
}

EstimationResult estimate(const Sample& sample, const EstimationConfig& cfg) {
  cfg.validate();
  const LagrangianProblem problem(sample);
  const auto starts = multistart_points(sample, cfg);
  EstimationResult best;
  bool have_converged = false;
  bool have_any = false;
  double best_h = std::numeric_limits<double>::infinity();
  std::ostringstream notes;
  int tried = 0;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    ++tried;
    const auto t0 = initial_state(starts[s]);
    EstimationResult r = newton_on(problem, t0, cfg);
    if (!r.converged) {
      notes << "start " << s << ": " << r.diagnostics << "; ";
      r = bfgs_on(problem, t0, cfg, cfg.seed + 0x100000001b3ULL * (s + 1));
      if (!r.converged) notes << "start " << s << ": " << r.diagnostics << "; ";
    }
    if (r.converged) {
      if (!have_converged || r.scaled_loglik > best.scaled_loglik) best = std::move(r);
      have_converged = true;
    } else if (!have_converged && (!have_any || r.residual_norm < best_h)) {
      best_h = r.residual_norm;
      best = std::move(r);
    }
    have_any = true;
  }
  best.starts_tried = tried;
  if (!have_converged) best.diagnostics = "all starts failed: " + notes.str();
  return best;
}

CalibrationReport calibrate_tolerance(const DensityMatrix& rho0, std::shared_ptr<const BasisSet> bases,
                                      const EstimationConfig& cfg, const CalibrationOptions& options) {
  require(bases != nullptr, "calibrate_tolerance: basis set required");
  require(options.replications > 0 && options.m > 0, "calibrate_tolerance: invalid replication settings");
  std::vector<Sample> samples;
  samples.reserve(options.replications);
  for (int r = 0; r < options.replications; ++r)
    samples.push_back(simulate_sample(rho0, bases, options.m, options.base_seed + r));
  for (double tol : options.ladder) {
    EstimationConfig trial = cfg;
    trial.residual_tolerance = tol;
    trial.likelihood_tolerance = tol;
    CalibrationReport report;
    report.tolerance = tol;
    bool ok = true;
    for (const auto& sample : samples) {
      const auto r = estimate(sample, trial);
      const double f = r.converged && r.physical ? fidelity(r.rho_hat, rho0) : 0.0;
      report.fidelities.push_back(f);
      if (f < options.target_fidelity) {
        ok = false;
        break;
      }
    }
    if (ok) return report;
  }
  throw NumericalError("calibrate_tolerance: no tolerance reaches the target fidelity");
}

}  // namespace qtomo
