#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qtomo/types.hpp"

namespace qtomo {

/// A square nonlinear system H(t) = 0 with analytic Jacobian.
///
/// `project` (optional) maps a trial point back onto the feasible region after
/// every step; `accept` (optional) is the extra convergence test applied once
/// the sum of squares is below tolerance, given the new and previous iterate.
struct ResidualSystem {
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
  std::function<void(Vector&)> project;
  std::function<bool(const Vector& current, const Vector& previous)> accept;
};

struct NewtonOptions {
  double residual_tolerance = 1e-9;
  int max_iterations = 100;
  int max_backtracks = 40;
  double singular_rcond = 1e-12;
};

struct AnnealingOptions {
  double residual_tolerance = 1e-9;
  int max_iterations = 2000;
  int max_backtracks = 40;
  int stagnation_window = 5;
  double stagnation_tolerance = 1e-10;
  int annealing_steps = 50;
  double initial_temperature_fraction = 0.1;
  double temperature_decay = 0.95;
  double perturbation_scale = 0.05;
  std::uint64_t seed = 0;
};

struct SolveReport {
  Vector t;
  double sum_of_squares = 0.0;
  int iterations = 0;
  bool converged = false;
  bool singular = false;
  int annealing_rounds = 0;
  /// h = H.H at the start and after each accepted iterate.
  std::vector<double> history;
};

inline double sum_of_squares(const Vector& h) { return h.squaredNorm(); }

/// Newton-Raphson on H(t) = 0; each step -J^{-1}H is halved until h = H.H
/// decreases. Stops with `singular` set when J is numerically rank deficient.
SolveReport newton_root(const ResidualSystem& system, const Vector& t0, const NewtonOptions& options);

/// Minimizes h = H.H with BFGS (inverse-Hessian update, interpolating line
/// search). When progress stalls a fixed number of Metropolis annealing
/// moves on h is applied from the stall point, then BFGS restarts.
SolveReport bfgs_anneal(const ResidualSystem& system, const Vector& t0, const AnnealingOptions& options);

}  // namespace qtomo
