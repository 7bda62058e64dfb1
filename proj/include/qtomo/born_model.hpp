#pragma once

#include "qtomo/sampling.hpp"

namespace qtomo {

/// Scaled multinomial log-likelihood of a Sample in Bloch coordinates.
///
/// Cell k = (basis r, outcome i) has Born probability p_k = 1/N + a_k . theta
/// with a_kj = Tr(l_j F_k) / 2, so the likelihood and all derivatives are
/// evaluated from the (cells x params) design matrix and the count weights
/// w_k = c_k / m.
class LikelihoodModel {
 public:
  explicit LikelihoodModel(const Sample& sample);

  int dim() const { return dim_; }
  int params() const { return static_cast<int>(design_.cols()); }
  int cells() const { return static_cast<int>(design_.rows()); }
  double total() const { return total_; }
  const Matrix& design() const { return design_; }
  const Vector& weights() const { return weights_; }
  const GeneratorSet& generators() const { return cached_generators(dim_); }
  const StructureConstants& structure() const { return cached_structure_constants(dim_); }

  Vector probabilities(const Vector& theta) const;

  /// Smallest Born probability over observed cells.
  double min_observed_probability(const Vector& theta) const;

  /// (1/m) sum_k c_k ln p_k. With floor > 0 probabilities below the floor are
  /// clipped; with floor == 0 a non-positive observed probability throws.
  double log_likelihood(const Vector& theta, double floor = 0.0) const;
  Vector score(const Vector& theta, double floor = 0.0) const;
  Matrix hessian(const Vector& theta, double floor = 0.0) const;

  /// (1/m) sum_k c_k s_k s_k^T with per-observation score s_k = a_k / p_k.
  Matrix score_outer_products(const Vector& theta) const;

 private:
  Vector observed_probabilities(const Vector& theta, double floor) const;

  int dim_ = 0;
  double total_ = 0.0;
  Matrix design_;
  Vector weights_;
};

}  // namespace qtomo
