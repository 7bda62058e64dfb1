#include "qtomo/born_model.hpp"

#include <cmath>
#include <limits>

namespace qtomo {

LikelihoodModel::LikelihoodModel(const Sample& sample) {
  const BasisSet& bases = sample.bases();
  dim_ = bases.dim();
  total_ = sample.total();
  require(total_ > 0.0, "LikelihoodModel: empty sample");
  const GeneratorSet& gens = cached_generators(dim_);
  const int n_cells = bases.size() * dim_;
  design_.resize(n_cells, gens.count());
  weights_.resize(n_cells);
  int k = 0;
  for (int r = 0; r < bases.size(); ++r) {
    for (const auto& obs : observables_from_basis(bases[r])) {
      for (int j = 0; j < gens.count(); ++j)
        design_(k, j) = 0.5 * (gens.lambdas[j] * obs.projector).trace().real();
      weights_[k] = sample.counts()(r, obs.outcome) / total_;
      ++k;
    }
  }
}

Vector LikelihoodModel::probabilities(const Vector& theta) const {
  require(theta.size() == params(), "LikelihoodModel: parameter length mismatch");
  return (design_ * theta).array() + 1.0 / dim_;
}

double LikelihoodModel::min_observed_probability(const Vector& theta) const {
  const Vector p = probabilities(theta);
  double lowest = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cells(); ++k)
    if (weights_[k] > 0.0) lowest = std::min(lowest, p[k]);
  return lowest;
}

Vector LikelihoodModel::observed_probabilities(const Vector& theta, double floor) const {
  Vector p = probabilities(theta);
  for (int k = 0; k < cells(); ++k) {
    if (weights_[k] <= 0.0) continue;
    if (floor > 0.0) {
      p[k] = std::max(p[k], floor);
    } else if (p[k] <= 0.0) {
      throw NumericalError("log-likelihood: non-positive probability for an observed outcome");
    }
  }
  return p;
}

double LikelihoodModel::log_likelihood(const Vector& theta, double floor) const {
  const Vector p = observed_probabilities(theta, floor);
  double total = 0.0;
  for (int k = 0; k < cells(); ++k)
    if (weights_[k] > 0.0) total += weights_[k] * std::log(p[k]);
  return total;
}

Vector LikelihoodModel::score(const Vector& theta, double floor) const {
  const Vector p = observed_probabilities(theta, floor);
  Vector g = Vector::Zero(params());
  for (int k = 0; k < cells(); ++k)
    if (weights_[k] > 0.0) g += (weights_[k] / p[k]) * design_.row(k).transpose();
  return g;
}

Matrix LikelihoodModel::hessian(const Vector& theta, double floor) const {
  const Vector p = observed_probabilities(theta, floor);
  Matrix h = Matrix::Zero(params(), params());
  for (int k = 0; k < cells(); ++k) {
    if (weights_[k] <= 0.0) continue;
    const Vector a = design_.row(k).transpose();
    h -= (weights_[k] / (p[k] * p[k])) * (a * a.transpose());
  }
  return h;
}

Matrix LikelihoodModel::score_outer_products(const Vector& theta) const {
  const Vector p = observed_probabilities(theta, 0.0);
  Matrix out = Matrix::Zero(params(), params());
  for (int k = 0; k < cells(); ++k) {
    if (weights_[k] <= 0.0) continue;
    const Vector s = design_.row(k).transpose() / p[k];
    out += weights_[k] * (s * s.transpose());
  }
  return out;
}

}  // namespace qtomo
