#include "qtomo/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace qtomo {

namespace {

struct Evaluation {
  Vector t;
  Vector residual;
  double h = std::numeric_limits<double>::infinity();
};

Evaluation evaluate(const ResidualSystem& system, Vector t) {
  if (system.project) system.project(t);
  Evaluation e;
  e.residual = system.residual(t);
  e.h = sum_of_squares(e.residual);
  if (!std::isfinite(e.h)) e.h = std::numeric_limits<double>::infinity();
  e.t = std::move(t);
  return e;
}

bool accepted(const ResidualSystem& system, const Vector& current, const Vector& previous) {
  return !system.accept || system.accept(current, previous);
}

}  // namespace

SolveReport newton_root(const ResidualSystem& system, const Vector& t0, const NewtonOptions& options) {
  const double tol2 = options.residual_tolerance * options.residual_tolerance;
  SolveReport report;
  Evaluation current = evaluate(system, t0);
  Vector previous = current.t;
  report.history.push_back(current.h);

  for (int it = 0;; ++it) {
    report.iterations = it;
    if (current.h <= tol2 && accepted(system, current.t, previous)) {
      report.converged = true;
      break;
    }
    if (it >= options.max_iterations) break;

    const Matrix jac = system.jacobian(current.t);
    Eigen::PartialPivLU<Matrix> lu(jac);
    if (!(lu.rcond() >= options.singular_rcond)) {
      report.singular = true;
      break;
    }
    const Vector step = -lu.solve(current.residual);

    double length = 1.0;
    bool improved = false;
    for (int b = 0; b <= options.max_backtracks; ++b, length *= 0.5) {
      Evaluation trial = evaluate(system, current.t + length * step);
      if (trial.h < current.h) {
        previous = current.t;
        current = std::move(trial);
        improved = true;
        break;
      }
    }
    if (!improved) break;
    report.history.push_back(current.h);
  }
  report.t = current.t;
  report.sum_of_squares = current.h;
  return report;
}

namespace {

Vector gradient_of_h(const ResidualSystem& system, const Evaluation& e) {
  return 2.0 * system.jacobian(e.t).transpose() * e.residual;
}

// Backtracking with quadratic interpolation along t + a d. On an exactly
// quadratic h the interpolated step is the exact line minimizer.
bool line_search(const ResidualSystem& system, const Evaluation& start, const Vector& grad,
                 const Vector& direction, int max_backtracks, Evaluation& out) {
  constexpr double kArmijo = 1e-4;
  const double slope = grad.dot(direction);
  if (!(slope < 0.0)) return false;
  double alpha = 1.0;
  for (int b = 0; b <= max_backtracks; ++b) {
    Evaluation trial = evaluate(system, start.t + alpha * direction);
    const double curvature = (trial.h - start.h - slope * alpha) / (alpha * alpha);
    double alpha_q = -1.0;
    if (std::isfinite(trial.h) && curvature > 0.0) alpha_q = -slope / (2.0 * curvature);
    if (trial.h <= start.h + kArmijo * alpha * slope) {
      if (alpha_q > 0.0 && std::abs(alpha_q - alpha) > 1e-12 * alpha) {
        Evaluation refined = evaluate(system, start.t + alpha_q * direction);
        if (refined.h < trial.h) trial = std::move(refined);
      }
      out = std::move(trial);
      return true;
    }
    alpha = (alpha_q > 0.0) ? std::clamp(alpha_q, 0.1 * alpha, 0.5 * alpha) : 0.5 * alpha;
  }
  return false;
}

}  // namespace

SolveReport bfgs_anneal(const ResidualSystem& system, const Vector& t0, const AnnealingOptions& options) {
  const double tol2 = options.residual_tolerance * options.residual_tolerance;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  SolveReport report;
  Evaluation current = evaluate(system, t0);
  const double initial_temperature = std::max(current.h, 1e-300) * options.initial_temperature_fraction;
  const auto n = current.t.size();
  Vector previous = current.t;
  Vector grad = gradient_of_h(system, current);
  Matrix inv_hessian = Matrix::Identity(n, n);
  report.history.push_back(current.h);
  Evaluation best = current;

  auto anneal = [&]() {
    ++report.annealing_rounds;
    double temperature = initial_temperature;
    Evaluation walker = current;
    for (int k = 0; k < options.annealing_steps; ++k) {
      Vector jump(n);
      const double scale = options.perturbation_scale * std::sqrt(temperature / initial_temperature);
      for (Eigen::Index i = 0; i < n; ++i) jump[i] = scale * normal(rng);
      Evaluation trial = evaluate(system, walker.t + jump);
      const double delta = trial.h - walker.h;
      if (std::isfinite(trial.h) && (delta <= 0.0 || uniform(rng) < std::exp(-delta / temperature))) {
        walker = std::move(trial);
        if (walker.h < best.h) best = walker;
      }
      temperature *= options.temperature_decay;
    }
    previous = current.t;
    current = best;
    grad = gradient_of_h(system, current);
    inv_hessian.setIdentity();
  };

  int since_progress_check = 0;
  double window_start_h = current.h;
  for (int it = 0;; ++it) {
    report.iterations = it;
    if (current.h <= tol2 && accepted(system, current.t, previous)) {
      report.converged = true;
      break;
    }
    if (it >= options.max_iterations) break;

    Vector direction = -inv_hessian * grad;
    if (!(grad.dot(direction) < 0.0)) {
      inv_hessian.setIdentity();
      direction = -grad;
    }
    Evaluation next;
    const bool moved = line_search(system, current, grad, direction, options.max_backtracks, next);
    if (moved) {
      const Vector next_grad = gradient_of_h(system, next);
      const Vector s = next.t - current.t;
      const Vector y = next_grad - grad;
      const double sy = s.dot(y);
      if (sy > 1e-14 * s.norm() * y.norm()) {
        const double rho = 1.0 / sy;
        const Matrix eye = Matrix::Identity(n, n);
        inv_hessian = (eye - rho * s * y.transpose()) * inv_hessian * (eye - rho * y * s.transpose()) +
                      rho * s * s.transpose();
      }
      previous = current.t;
      current = std::move(next);
      grad = next_grad;
      if (current.h < best.h) best = current;
      report.history.push_back(current.h);
    }

    ++since_progress_check;
    const bool stalled =
        !moved || (since_progress_check >= options.stagnation_window &&
                   window_start_h - current.h < options.stagnation_tolerance * window_start_h);
    if (since_progress_check >= options.stagnation_window || !moved) {
      since_progress_check = 0;
      window_start_h = current.h;
    }
    if (stalled && !(current.h <= tol2 && accepted(system, current.t, previous))) {
      if (options.annealing_steps <= 0 && !moved) break;
      anneal();
      window_start_h = current.h;
      since_progress_check = 0;
    }
  }
  report.t = current.t;
  report.sum_of_squares = current.h;
  return report;
}

}  // namespace qtomo
