#pragma once

#include <vector>

#include "qtomo/types.hpp"

namespace qtomo {

/// Orthonormal traceless Hermitian generators of su(N), Tr(l_i l_j) = 2 delta_ij.
/// N = 2 gives the Pauli matrices; N = 3 the Gell-Mann matrices in the usual
/// order (diagonal generators at positions 3 and 8, one-based).
struct GeneratorSet {
  int dim = 0;
  std::vector<CMatrix> lambdas;

  int count() const { return static_cast<int>(lambdas.size()); }
};

GeneratorSet build_generators(int dim);

/// f_ijk (antisymmetric) and g_ijk (symmetric), stored densely.
class StructureConstants {
 public:
  StructureConstants() = default;
  StructureConstants(int dim, int count, std::vector<double> f, std::vector<double> g);

  int dim() const { return dim_; }
  int count() const { return count_; }
  double f(int i, int j, int k) const { return f_[index(i, j, k)]; }
  double g(int i, int j, int k) const { return g_[index(i, j, k)]; }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * count_ + j) * count_ + k;
  }

  int dim_ = 0;
  int count_ = 0;
  std::vector<double> f_;
  std::vector<double> g_;
};

StructureConstants compute_structure_constants(const GeneratorSet& gens);

/// Process-wide immutable generator and structure-constant tables for N in {2,3}.
const GeneratorSet& cached_generators(int dim);
const StructureConstants& cached_structure_constants(int dim);

/// Real coordinates theta_j = Tr(l_j rho).
struct BlochVector {
  Vector theta;

  BlochVector() = default;
  explicit BlochVector(Vector values) : theta(std::move(values)) {}
  BlochVector(std::initializer_list<double> values);

  int size() const { return static_cast<int>(theta.size()); }
  double operator[](int j) const { return theta[j]; }
};

struct DensityMatrix {
  CMatrix rho;

  DensityMatrix() = default;
  explicit DensityMatrix(CMatrix m) : rho(std::move(m)) {}

  int dim() const { return static_cast<int>(rho.rows()); }
};

DensityMatrix bloch_to_density(const BlochVector& theta, const GeneratorSet& gens);
BlochVector density_to_bloch(const DensityMatrix& rho, const GeneratorSet& gens);

/// Characteristic-polynomial constraint values in the factorial-scaled form:
/// values[0] = 1!a_1 = 1, values[1] = 2!a_2, values[2] = 3!a_3 (N = 3 only).
struct CharPolyCoefficients {
  Vector values;
};

CharPolyCoefficients char_poly_coefficients(const BlochVector& theta,
                                            const StructureConstants& sc);

/// Gradients of j!a_j with respect to theta for j = 2..N, one column each.
Matrix char_poly_gradients(const BlochVector& theta, const StructureConstants& sc);

/// Hessian of j!a_j (j = 2..N) with respect to theta.
Matrix char_poly_hessian(int j, const BlochVector& theta, const StructureConstants& sc);

inline constexpr double kAdmissibilityTolerance = 1e-10;
inline constexpr double kPhysicalTolerance = 1e-9;

bool is_admissible(const BlochVector& theta, const StructureConstants& sc);

/// Eigenvalues sorted descending, eigenvectors in matching columns.
struct EigenDecomposition {
  Vector eigenvalues;
  CMatrix eigenvectors;
};

/// Closed-form roots for 2x2, cyclic complex Jacobi otherwise.
EigenDecomposition hermitian_eigen(const CMatrix& a);
inline EigenDecomposition hermitian_eigen(const DensityMatrix& rho) {
  return hermitian_eigen(rho.rho);
}

double min_eigenvalue(const DensityMatrix& rho);
bool is_physical(const DensityMatrix& rho);

/// Tr^2 sqrt(sqrt(rho_hat) rho sqrt(rho_hat)).
double fidelity(const DensityMatrix& rho_hat, const DensityMatrix& rho);

/// Largest entrywise modulus of a - a^dagger.
double hermitian_defect(const CMatrix& a);

}  // namespace qtomo
