#include "qtomo/measurement.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace qtomo {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::kMub: return "MUB";
    case BasisKind::kMbb: return "MBB";
    case BasisKind::kCustom: return "CUSTOM";
  }
  return "CUSTOM";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "MUB" || name == "mub") return BasisKind::kMub;
  if (name == "MBB" || name == "mbb") return BasisKind::kMbb;
  if (name == "CUSTOM" || name == "custom") return BasisKind::kCustom;
  throw InvalidArgument("unknown basis kind '" + name + "'");
}

double unitarity_defect(const CMatrix& v) {
  const auto n = v.cols();
  return (v.adjoint() * v - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

BasisSet::BasisSet(BasisKind kind, std::vector<MeasurementBasis> bases)
    : kind_(kind), bases_(std::move(bases)) {
  require(!bases_.empty(), "BasisSet: at least one basis required");
  dim_ = bases_.front().dim();
  for (std::size_t r = 0; r < bases_.size(); ++r) {
    const auto& v = bases_[r].vectors;
    require(v.rows() == dim_ && v.cols() == dim_, "BasisSet: bases must share one square shape");
    if (unitarity_defect(v) > kUnitarityTolerance) {
      throw InvalidArgument("BasisSet: basis " + std::to_string(r) + " is not unitary");
    }
  }
}

BasisSet mub_bases(int dim) {
  std::vector<MeasurementBasis> bases;
  if (dim == 2) {
    const double h = 1.0 / std::sqrt(2.0);
    const Complex i{0.0, 1.0};
    CMatrix v0 = CMatrix::Identity(2, 2);
    CMatrix v1(2, 2), v2(2, 2);
    v1 << h, h, h, -h;
    v2 << h, h, i * h, -i * h;
    bases = {{v0, 0}, {v1, 1}, {v2, 2}};
  } else if (dim == 3) {
    bases.push_back({CMatrix::Identity(3, 3), 0});
    const double norm = 1.0 / std::sqrt(3.0);
    for (int r = 1; r <= 3; ++r) {
      CMatrix v(3, 3);
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          const double phase = 2.0 * std::numbers::pi / 3.0 * (r * p * p + p * q);
          v(p, q) = norm * std::polar(1.0, phase);
        }
      bases.push_back({v, r});
    }
  } else {
    throw InvalidArgument("mub_bases: unsupported dimension " + std::to_string(dim));
  }
  return BasisSet(BasisKind::kMub, std::move(bases));
}

namespace {

// Max |<v_i^(r), v_j^(r')>| over r' != r.
double cross_modulus_of(const std::vector<MeasurementBasis>& bases, std::size_t r) {
  double best = 0.0;
  for (std::size_t other = 0; other < bases.size(); ++other) {
    if (other == r) continue;
    const CMatrix overlaps = bases[r].vectors.adjoint() * bases[other].vectors;
    best = std::max(best, overlaps.cwiseAbs().maxCoeff());
  }
  return best;
}

}  // namespace

double verify_mub(const BasisSet& bases) {
  const double target = 1.0 / std::sqrt(static_cast<double>(bases.dim()));
  double worst = 0.0;
  for (int r = 0; r < bases.size(); ++r)
    for (int other = r + 1; other < bases.size(); ++other) {
      const CMatrix overlaps = bases[r].vectors.adjoint() * bases[other].vectors;
      worst = std::max(worst, (overlaps.cwiseAbs().array() - target).abs().maxCoeff());
    }
  return worst;
}

double max_cross_modulus(const BasisSet& bases) {
  double best = 0.0;
  for (std::size_t r = 0; r < bases.bases().size(); ++r)
    best = std::max(best, cross_modulus_of(bases.bases(), r));
  return best;
}

MeasurementBasis rotate_basis(const MeasurementBasis& basis, const CMatrix& generator, double s) {
  require(generator.rows() == basis.dim() && generator.cols() == basis.dim(),
          "rotate_basis: generator shape mismatch");
  if (hermitian_defect(generator) > 1e-12) {
    throw InvalidArgument("rotate_basis: rotation generator is not Hermitian");
  }
  if (s == 0.0) return basis;
  const auto ed = hermitian_eigen(generator);
  CVector phases(ed.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) phases[k] = std::polar(1.0, ed.eigenvalues[k] * s);
  const CMatrix u = ed.eigenvectors * phases.asDiagonal() * ed.eigenvectors.adjoint();
  return {u * basis.vectors * u.adjoint(), basis.label};
}

namespace {

CMatrix random_hermitian(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix b(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      b(i, j) = Complex(re, im);
    }
  CMatrix a = 0.5 * (b + b.adjoint());
  const auto ed = hermitian_eigen(a);
  const double spectral = ed.eigenvalues.cwiseAbs().maxCoeff();
  return a / spectral;
}

}  // namespace

CMatrix random_hermitian(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_hermitian(dim, rng);
}

BasisSet generate_mbb(const BasisSet& mub, const MbbOptions& options) {
  const int dim = mub.dim();
  const double threshold = options.alpha / std::sqrt(static_cast<double>(dim));
  require(options.alpha >= 1.0, "generate_mbb: alpha must be at least 1");
  require(threshold <= 1.0, "generate_mbb: alpha / sqrt(N) exceeds 1, condition unattainable");
  require(options.step > 0.0, "generate_mbb: step must be positive");
  require(mub.size() >= 2, "generate_mbb: need at least two bases");

  std::mt19937_64 rng(options.seed);
  std::vector<MeasurementBasis> current = mub.bases();
  auto satisfied = [&](std::size_t r) { return cross_modulus_of(current, r) + 1e-12 >= threshold; };

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (std::size_t r = 1; r < current.size(); ++r) {
      if (satisfied(r)) continue;
      const MeasurementBasis start = current[r];
      bool done = false;
      while (!done) {
        const CMatrix axis = random_hermitian(dim, rng);
        for (int k = 1; k <= options.max_steps_per_axis; ++k) {
          current[r] = rotate_basis(start, axis, k * options.step);
          if (satisfied(r)) {
            done = true;
            break;
          }
        }
        if (!done) current[r] = start;
      }
    }
    bool all = true;
    for (std::size_t r = 1; r < current.size(); ++r) all = all && satisfied(r);
    if (all) return BasisSet(BasisKind::kMbb, std::move(current));
  }
  throw NumericalError("generate_mbb: condition not met within the sweep budget");
}

std::vector<CMatrix> appendix_mbb_printed() {
  auto c = [](double re, double im) { return Complex(re, im); };
  CMatrix v1(3, 3), v2(3, 3), v3(3, 3), v4(3, 3);
  v1 << c(0.732, 0.350), c(-0.078, -0.223), c(-0.163, -0.507),
        c(-0.078, -0.223), c(0.705, -0.649), c(-0.152, -0.036),
        c(-0.163, -0.507), c(-0.152, -0.036), c(0.460, -0.693);
  v2 << c(0.571, 0.016), c(-0.738, -0.337), c(-0.122, -0.024),
        c(0.074, 0.144), c(-0.089, -0.001), c(0.790, 0.584),
        c(0.796, -0.115), c(0.563, 0.130), c(-0.075, 0.114);
  v3 << c(0.301, 0.387), c(-0.095, -0.697), c(-0.168, -0.487),
        c(0.538, 0.003), c(0.281, -0.336), c(0.197, 0.693),
        c(0.674, 0.124), c(0.119, 0.548), c(0.264, -0.382);
  v4 << c(-0.115, 0.952), c(0.009, 0.214), c(-0.129, -0.132),
        c(0.009, 0.214), c(0.290, -0.391), c(0.841, 0.097),
        c(-0.129, -0.132), c(0.841, 0.097), c(-0.156, -0.474);
  return {v1, v2, v3, v4};
}

CMatrix nearest_unitary(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

BasisSet appendix_mbb(bool include_identity) {
  std::vector<MeasurementBasis> bases;
  int label = 0;
  if (include_identity) bases.push_back({CMatrix::Identity(3, 3), label++});
  for (const auto& printed : appendix_mbb_printed()) bases.push_back({nearest_unitary(printed), label++});
  return BasisSet(BasisKind::kMbb, std::move(bases));
}

std::vector<Observable> observables_from_basis(const MeasurementBasis& basis) {
  std::vector<Observable> out;
  out.reserve(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    const CVector v = basis.vectors.col(i);
    out.push_back({v * v.adjoint(), basis.label, i});
  }
  return out;
}

Vector born_probabilities(const DensityMatrix& rho, const MeasurementBasis& basis) {
  require(rho.dim() == basis.dim(), "born_probabilities: dimension mismatch");
  Vector p(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    const CVector v = basis.vectors.col(i);
    double value = (v.adjoint() * rho.rho * v)(0, 0).real();
    if (value < -1e-12) throw InvalidArgument("born_probabilities: negative probability, state not physical");
    p[i] = std::max(value, 0.0);
  }
  return p;
}

}  // namespace qtomo
