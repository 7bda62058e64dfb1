#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtomo/bloch.hpp"

namespace qtomo {

/// Unitary matrix whose columns are the measurement eigenvectors of one basis.
struct MeasurementBasis {
  CMatrix vectors;
  int label = 0;

  int dim() const { return static_cast<int>(vectors.rows()); }
};

enum class BasisKind { kMub, kMbb, kCustom };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

/// An ordered list of measurement bases on the same Hilbert space.
///
/// A complete strategy uses N + 1 bases; larger, redundant sets (such as the
/// printed MBB fixture plus the identity) are accepted as well. Every member is
/// checked for unitarity on construction.
class BasisSet {
 public:
  BasisSet() = default;
  BasisSet(BasisKind kind, std::vector<MeasurementBasis> bases);

  BasisKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int size() const { return static_cast<int>(bases_.size()); }
  const MeasurementBasis& operator[](int r) const { return bases_[r]; }
  const std::vector<MeasurementBasis>& bases() const { return bases_; }

 private:
  BasisKind kind_ = BasisKind::kCustom;
  int dim_ = 0;
  std::vector<MeasurementBasis> bases_;
};

/// Rank-one projector V|i><i|V^dagger for outcome i (zero-based) of basis r.
struct Observable {
  CMatrix projector;
  int basis = 0;
  int outcome = 0;
};

inline constexpr double kUnitarityTolerance = 1e-12;

double unitarity_defect(const CMatrix& v);

BasisSet mub_bases(int dim);

/// Max over cross-basis eigenvector pairs of | |<v_i, v_j>| - 1/sqrt(N) |.
double verify_mub(const BasisSet& bases);

/// Max over cross-basis eigenvector pairs of |<v_i, v_j>|.
double max_cross_modulus(const BasisSet& bases);

/// U V U^dagger with U = exp(i A s), A Hermitian.
MeasurementBasis rotate_basis(const MeasurementBasis& basis, const CMatrix& generator, double s);

struct MbbOptions {
  double alpha = 1.2;
  double step = 0.05;
  std::uint64_t seed = 0;
  int max_sweeps = 50;
  int max_steps_per_axis = 400;
};

/// Rotates bases 1..N of `mub` (basis 0 fixed) with seeded random Hermitian
/// axes until every rotated basis has some cross-basis pair with modulus at
/// least alpha / sqrt(N).
BasisSet generate_mbb(const BasisSet& mub, const MbbOptions& options);

/// Random Hermitian matrix with unit spectral norm, drawn from `seed`.
CMatrix random_hermitian(int dim, std::uint64_t seed);

/// The four printed spin-1 MBB matrices, as printed (not unitary).
std::vector<CMatrix> appendix_mbb_printed();

/// The printed spin-1 MBB fixture projected to the nearest unitaries; with
/// `include_identity` the identity basis is prepended (five bases).
BasisSet appendix_mbb(bool include_identity = false);

/// Nearest unitary (polar factor) of a square matrix.
CMatrix nearest_unitary(const CMatrix& m);

std::vector<Observable> observables_from_basis(const MeasurementBasis& basis);

/// Born probabilities Tr(rho F_i) for every outcome of one basis.
Vector born_probabilities(const DensityMatrix& rho, const MeasurementBasis& basis);

}  // namespace qtomo
