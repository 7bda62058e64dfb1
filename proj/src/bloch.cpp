#include "qtomo/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qtomo {

namespace {

constexpr Complex kI{0.0, 1.0};

CMatrix symmetric_unit(int dim, int j, int k) {
  CMatrix m = CMatrix::Zero(dim, dim);
  m(j, k) = 1.0;
  m(k, j) = 1.0;
  return m;
}

CMatrix antisymmetric_unit(int dim, int j, int k) {
  CMatrix m = CMatrix::Zero(dim, dim);
  m(j, k) = -kI;
  m(k, j) = kI;
  return m;
}

// w_l: sqrt(2/(l(l+1))) * (sum_{j<l} |j><j| - l |l><l|), zero-based l = 1..N-1.
CMatrix diagonal_generator(int dim, int l) {
  CMatrix m = CMatrix::Zero(dim, dim);
  const double scale = std::sqrt(2.0 / (l * (l + 1.0)));
  for (int j = 0; j < l; ++j) m(j, j) = scale;
  m(l, l) = -scale * l;
  return m;
}

}  // namespace

GeneratorSet build_generators(int dim) {
  GeneratorSet gens;
  gens.dim = dim;
  if (dim == 2) {
    gens.lambdas = {symmetric_unit(2, 0, 1), antisymmetric_unit(2, 0, 1), diagonal_generator(2, 1)};
  } else if (dim == 3) {
    gens.lambdas = {
        symmetric_unit(3, 0, 1), antisymmetric_unit(3, 0, 1), diagonal_generator(3, 1),
        symmetric_unit(3, 0, 2), antisymmetric_unit(3, 0, 2), symmetric_unit(3, 1, 2),
        antisymmetric_unit(3, 1, 2), diagonal_generator(3, 2),
    };
  } else {
    throw InvalidArgument("build_generators: unsupported dimension " + std::to_string(dim));
  }
  return gens;
}

StructureConstants::StructureConstants(int dim, int count, std::vector<double> f,
                                       std::vector<double> g)
    : dim_(dim), count_(count), f_(std::move(f)), g_(std::move(g)) {
  const auto expected = static_cast<std::size_t>(count) * count * count;
  require(f_.size() == expected && g_.size() == expected,
          "StructureConstants: tensor size mismatch");
}

StructureConstants compute_structure_constants(const GeneratorSet& gens) {
  const int n = gens.count();
  const int dim = gens.dim;
  std::vector<double> f(static_cast<std::size_t>(n) * n * n);
  std::vector<double> g(f.size());
  const CMatrix identity = CMatrix::Identity(dim, dim);
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const CMatrix& a = gens.lambdas[i];
      const CMatrix& b = gens.lambdas[j];
      const CMatrix commutator = a * b - b * a;
      CMatrix anti = a * b + b * a;
      if (i == j) anti -= (4.0 / dim) * identity;
      for (int k = 0; k < n; ++k, ++idx) {
        const CMatrix& c = gens.lambdas[k];
        f[idx] = ((commutator * c).trace() / (4.0 * kI)).real();
        g[idx] = ((anti * c).trace() / 4.0).real();
      }
    }
  }
  return StructureConstants(dim, n, std::move(f), std::move(g));
}

const GeneratorSet& cached_generators(int dim) {
  static const GeneratorSet two = build_generators(2);
  static const GeneratorSet three = build_generators(3);
  if (dim == 2) return two;
  if (dim == 3) return three;
  throw InvalidArgument("unsupported dimension " + std::to_string(dim));
}

const StructureConstants& cached_structure_constants(int dim) {
  static const StructureConstants two = compute_structure_constants(cached_generators(2));
  static const StructureConstants three = compute_structure_constants(cached_generators(3));
  if (dim == 2) return two;
  if (dim == 3) return three;
  throw InvalidArgument("unsupported dimension " + std::to_string(dim));
}

BlochVector::BlochVector(std::initializer_list<double> values) : theta(values.size()) {
  int j = 0;
  for (double v : values) theta[j++] = v;
}

DensityMatrix bloch_to_density(const BlochVector& theta, const GeneratorSet& gens) {
  if (theta.size() != gens.count()) {
    throw InvalidArgument("bloch_to_density: expected " + std::to_string(gens.count()) +
                          " coordinates, got " + std::to_string(theta.size()));
  }
  CMatrix rho = CMatrix::Identity(gens.dim, gens.dim) / static_cast<double>(gens.dim);
  for (int j = 0; j < gens.count(); ++j) rho += 0.5 * theta[j] * gens.lambdas[j];
  return DensityMatrix(std::move(rho));
}

BlochVector density_to_bloch(const DensityMatrix& rho, const GeneratorSet& gens) {
  require(rho.dim() == gens.dim, "density_to_bloch: dimension mismatch");
  Vector theta(gens.count());
  for (int j = 0; j < gens.count(); ++j) theta[j] = (gens.lambdas[j] * rho.rho).trace().real();
  return BlochVector(std::move(theta));
}

namespace {

void require_supported(const StructureConstants& sc, const BlochVector& theta) {
  if (sc.dim() != 2 && sc.dim() != 3) {
    throw InvalidArgument("characteristic coefficients only for N in {2,3}");
  }
  require(theta.size() == sc.count(), "Bloch vector length does not match structure constants");
}

double cubic_form(const BlochVector& theta, const StructureConstants& sc) {
  const int n = sc.count();
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) total += sc.g(i, j, k) * theta[i] * theta[j] * theta[k];
  return total;
}

}  // namespace

CharPolyCoefficients char_poly_coefficients(const BlochVector& theta,
                                            const StructureConstants& sc) {
  require_supported(sc, theta);
  const double n = sc.dim();
  const double norm2 = theta.theta.squaredNorm();
  CharPolyCoefficients out;
  out.values.resize(sc.dim());
  out.values[0] = 1.0;
  out.values[1] = (n - 1.0) / n - 0.5 * norm2;
  if (sc.dim() == 3) {
    out.values[2] = (n - 1.0) * (n - 2.0) / (n * n) - 3.0 * (n - 2.0) / (2.0 * n) * norm2 +
                    0.5 * cubic_form(theta, sc);
  }
  return out;
}

Matrix char_poly_gradients(const BlochVector& theta, const StructureConstants& sc) {
  require_supported(sc, theta);
  const int n = sc.count();
  const double dim = sc.dim();
  Matrix grads(n, sc.dim() - 1);
  grads.col(0) = -theta.theta;
  if (sc.dim() == 3) {
    for (int k = 0; k < n; ++k) {
      double quad = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) quad += sc.g(k, i, j) * theta[i] * theta[j];
      grads(k, 1) = -3.0 * (dim - 2.0) / dim * theta[k] + 1.5 * quad;
    }
  }
  return grads;
}

Matrix char_poly_hessian(int j, const BlochVector& theta, const StructureConstants& sc) {
  require_supported(sc, theta);
  require(j >= 2 && j <= sc.dim(), "char_poly_hessian: constraint index out of range");
  const int n = sc.count();
  const double dim = sc.dim();
  if (j == 2) return -Matrix::Identity(n, n);
  Matrix hess = -3.0 * (dim - 2.0) / dim * Matrix::Identity(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      double lin = 0.0;
      for (int i = 0; i < n; ++i) lin += sc.g(k, l, i) * theta[i];
      hess(k, l) += 3.0 * lin;
    }
  return hess;
}

bool is_admissible(const BlochVector& theta, const StructureConstants& sc) {
  const auto coeffs = char_poly_coefficients(theta, sc);
  return coeffs.values.minCoeff() >= -kAdmissibilityTolerance;
}

double hermitian_defect(const CMatrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

namespace {

void sort_descending(EigenDecomposition& ed) {
  const int n = static_cast<int>(ed.eigenvalues.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ed.eigenvalues[a] > ed.eigenvalues[b]; });
  Vector values(n);
  CMatrix vectors(n, n);
  for (int i = 0; i < n; ++i) {
    values[i] = ed.eigenvalues[order[i]];
    vectors.col(i) = ed.eigenvectors.col(order[i]);
  }
  ed.eigenvalues = std::move(values);
  ed.eigenvectors = std::move(vectors);
}

EigenDecomposition eigen_2x2(const CMatrix& a) {
  const double p = a(0, 0).real();
  const double d = a(1, 1).real();
  const Complex b = 0.5 * (a(0, 1) + std::conj(a(1, 0)));
  const double mean = 0.5 * (p + d);
  const double radius = std::hypot(0.5 * (p - d), std::abs(b));
  EigenDecomposition ed;
  ed.eigenvalues = Vector(2);
  ed.eigenvalues << mean + radius, mean - radius;
  ed.eigenvectors = CMatrix(2, 2);
  if (std::abs(b) <= 1e-300) {
    // Already diagonal; order by diagonal entries.
    if (p >= d) {
      ed.eigenvectors << 1.0, 0.0, 0.0, 1.0;
    } else {
      ed.eigenvectors << 0.0, 1.0, 1.0, 0.0;
    }
    return ed;
  }
  for (int c = 0; c < 2; ++c) {
    const double delta = ed.eigenvalues[c];
    // Two candidate null vectors of (a - delta I); keep the better conditioned one.
    CVector u(2), w(2);
    u << b, delta - p;
    w << delta - d, std::conj(b);
    CVector v = u.norm() >= w.norm() ? u : w;
    ed.eigenvectors.col(c) = v / v.norm();
  }
  return ed;
}

EigenDecomposition eigen_jacobi(const CMatrix& input) {
  const int n = static_cast<int>(input.rows());
  CMatrix a = 0.5 * (input + input.adjoint());
  CMatrix v = CMatrix::Identity(n, n);
  const double threshold = 1e-13 * std::max(1.0, a.norm());
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off < threshold) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double modulus = std::abs(a(p, q));
        if (modulus < 1e-300) continue;
        const Complex phase = a(p, q) / modulus;
        const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * modulus);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J = diag(phase correction) * real rotation; J^dagger a J zeroes a(p,q).
        CMatrix rot = CMatrix::Identity(n, n);
        rot(p, p) = c;
        rot(p, q) = s;
        rot(q, p) = -s * std::conj(phase);
        rot(q, q) = c * std::conj(phase);
        a = rot.adjoint() * a * rot;
        v = v * rot;
      }
    }
  }
  EigenDecomposition ed;
  ed.eigenvalues = a.diagonal().real();
  ed.eigenvectors = v;
  return ed;
}

}  // namespace

EigenDecomposition hermitian_eigen(const CMatrix& a) {
  require(a.rows() == a.cols() && a.rows() > 0, "hermitian_eigen: square input required");
  if (hermitian_defect(a) > 1e-8) throw InvalidArgument("hermitian_eigen: input is not Hermitian");
  EigenDecomposition ed = a.rows() == 2 ? eigen_2x2(a) : eigen_jacobi(a);
  sort_descending(ed);
  return ed;
}

double min_eigenvalue(const DensityMatrix& rho) {
  return hermitian_eigen(rho).eigenvalues.minCoeff();
}

bool is_physical(const DensityMatrix& rho) { return min_eigenvalue(rho) >= -kPhysicalTolerance; }

namespace {

CMatrix psd_sqrt(const EigenDecomposition& ed) {
  const Vector roots = ed.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return ed.eigenvectors * roots.cast<Complex>().asDiagonal() * ed.eigenvectors.adjoint();
}

}  // namespace

double fidelity(const DensityMatrix& rho_hat, const DensityMatrix& rho) {
  require(rho_hat.dim() == rho.dim(), "fidelity: dimension mismatch");
  const auto ed_hat = hermitian_eigen(rho_hat);
  const auto ed = hermitian_eigen(rho);
  if (ed_hat.eigenvalues.minCoeff() < -kPhysicalTolerance ||
      ed.eigenvalues.minCoeff() < -kPhysicalTolerance) {
    throw InvalidArgument("fidelity: negative eigenvalue in argument");
  }
  const CMatrix root = psd_sqrt(ed_hat);
  const CMatrix inner = root * rho.rho * root;
  const auto ed_inner = hermitian_eigen(CMatrix(0.5 * (inner + inner.adjoint())));
  const double trace = ed_inner.eigenvalues.cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(trace * trace, 0.0, 1.0);
}

}  // namespace qtomo
