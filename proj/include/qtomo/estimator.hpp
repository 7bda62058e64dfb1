#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qtomo/born_model.hpp"

namespace qtomo {

/// Newton unknowns t = (theta, lambda, gamma): Bloch coordinates, one
/// multiplier and one slack per constraint j!a_j >= 0, j = 2..N.
struct LagrangianState {
  BlochVector theta;
  Vector lambda;
  Vector gamma;

  Vector pack() const;
  static LagrangianState unpack(const Vector& t, int params, int constraints);
};

/// lambda = 0 and gamma_j = sqrt(max(j!a_j(theta), 1e-6)).
LagrangianState initial_state(const BlochVector& theta);

struct EstimationConfig {
  double residual_tolerance = 1e-9;
  double likelihood_tolerance = 1e-12;
  int max_newton_iters = 100;
  int max_backtracks = 40;
  int bfgs_max_iters = 2000;
  int annealing_steps = 50;
  double annealing_initial_fraction = 0.1;
  double annealing_decay = 0.95;
  int multistart_count = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class EstimationMethod { kNewton, kBfgsAnnealing, kMethodOfMoments };

std::string to_string(EstimationMethod method);

struct EstimationResult {
  BlochVector theta_hat;
  DensityMatrix rho_hat;
  bool converged = false;
  bool physical = false;
  EstimationMethod method = EstimationMethod::kNewton;
  double scaled_loglik = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  LagrangianState state;
  bool singular_jacobian = false;
  int starts_tried = 0;
  std::string diagnostics;
};

/// Probabilities below this floor are clipped inside logs while iterating.
inline constexpr double kProbabilityFloor = 1e-12;

double log_likelihood(const BlochVector& theta, const Sample& sample);
Vector score(const BlochVector& theta, const Sample& sample);

/// [score + sum_j lambda_j grad(j!a_j); j!a_j - gamma_j^2; 2 lambda_j gamma_j].
Vector lagrangian_residual(const LagrangianState& t, const Sample& sample);
Matrix lagrangian_jacobian(const LagrangianState& t, const Sample& sample);

EstimationResult newton_solve(const LagrangianState& t0, const Sample& sample, const EstimationConfig& cfg);
EstimationResult bfgs_sa_solve(const LagrangianState& t0, const Sample& sample, const EstimationConfig& cfg);

/// Multistart constrained ML: maximally mixed start, the projected moment
/// estimate, then seeded random admissible points. Newton first, BFGS with
/// annealing as fallback; best converged log-likelihood wins.
EstimationResult estimate(const Sample& sample, const EstimationConfig& cfg);

/// Starting points used by estimate, in order.
std::vector<BlochVector> multistart_points(const Sample& sample, const EstimationConfig& cfg);

struct MomentEstimate {
  BlochVector theta;
  bool admissible = false;
};

/// Linear (least-squares) inversion of observed frequencies.
MomentEstimate tomographic_inversion(const Sample& sample);

/// Moment estimate packaged as an EstimationResult, method kMethodOfMoments.
EstimationResult moment_result(const Sample& sample);

/// Largest s in [0, 1] with s * theta admissible, times `margin` when s < 1.
BlochVector shrink_to_admissible(const BlochVector& theta, double margin = 0.95);

struct CalibrationOptions {
  int replications = 20;
  int m = 10000;
  double target_fidelity = 0.999;
  std::uint64_t base_seed = 20240;
  /// Candidates tried loosest first.
  std::vector<double> ladder = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 1e-10, 1e-12};
};

struct CalibrationReport {
  double tolerance = 0.0;
  std::vector<double> fidelities;
};

/// Loosest ladder tolerance (applied to both residual and likelihood
/// criteria) for which every replication reaches the target fidelity.
CalibrationReport calibrate_tolerance(const DensityMatrix& rho0, std::shared_ptr<const BasisSet> bases,
                                      const EstimationConfig& cfg, const CalibrationOptions& options = {});

}  // namespace qtomo
