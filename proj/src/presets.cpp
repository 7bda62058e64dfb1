#include "qtomo/presets.hpp"

namespace qtomo {

namespace {

HypothesisSpec theta_test(std::string name, TestKind kind, std::vector<int> coords, const BlochVector& theta,
                          double alternative) {
  HypothesisSpec h;
  h.name = std::move(name);
  h.kind = kind;
  h.target = TargetQuantity::kTheta;
  h.truth.resize(coords.size());
  for (std::size_t a = 0; a < coords.size(); ++a) h.truth[a] = theta[coords[a]];
  h.alternative = Vector::Constant(coords.size(), alternative);
  h.coords = std::move(coords);
  return h;
}

DensityMatrix rotated_diagonal(const Vector& eigenvalues, std::uint64_t seed) {
  const int dim = static_cast<int>(eigenvalues.size());
  const CMatrix a = random_hermitian(dim, seed);
  const auto ed = hermitian_eigen(a);
  CMatrix phases = CMatrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) phases(i, i) = std::exp(Complex(0.0, 1.3 * ed.eigenvalues[i]));
  const CMatrix u = ed.eigenvectors * phases * ed.eigenvectors.adjoint();
  CMatrix rho = u * eigenvalues.cast<Complex>().asDiagonal() * u.adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(rho);
}

SystemPreset make(std::string name, std::string system, const DensityMatrix& rho) {
  SystemPreset p;
  p.name = std::move(name);
  p.system = std::move(system);
  p.rho0 = rho;
  p.hypotheses = default_hypotheses(p.theta());
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"reference-spin-half", "reference-spin-one", "near-pure-spin-half", "near-pure-spin-one"};
}

std::vector<HypothesisSpec> default_hypotheses(const BlochVector& theta) {
  std::vector<HypothesisSpec> out;
  if (theta.size() == 3) {
    out.push_back(theta_test("t_theta2", TestKind::kT, {1}, theta, 0.5));
    out.push_back(theta_test("wald_theta123", TestKind::kWald, {0, 1, 2}, theta, 0.5));
  } else if (theta.size() == 8) {
    out.push_back(theta_test("t_theta6", TestKind::kT, {5}, theta, 0.5));
    const auto ed = hermitian_eigen(bloch_to_density(theta, cached_generators(3)));
    HypothesisSpec d;
    d.name = "t_delta1";
    d.kind = TestKind::kT;
    d.target = TargetQuantity::kEigenvalue;
    d.coords = {0};
    d.truth = Vector::Constant(1, ed.eigenvalues[0]);
    d.alternative = Vector::Constant(1, 0.5);
    out.push_back(d);
    out.push_back(theta_test("wald_theta346", TestKind::kWald, {2, 3, 5}, theta, 0.5));
  } else {
    throw InvalidArgument("default_hypotheses: theta must have length 3 or 8");
  }
  return out;
}

SystemPreset find_preset(const std::string& name) {
  if (name == "reference-spin-half")
    return make(name, "spin_half", bloch_to_density(BlochVector{-0.44, -0.02, 0.19}, cached_generators(2)));
  if (name == "reference-spin-one")
    return make(name, "spin_one",
                bloch_to_density(BlochVector{0.15, -0.14, -0.07, -0.04, -0.15, -0.01, -0.17, -0.23},
                                 cached_generators(3)));
  if (name == "near-pure-spin-half") {
    const Vector dir = Vector{{-0.44, -0.02, 0.19}}.normalized();
    return make(name, "spin_half", bloch_to_density(BlochVector(0.98 * dir), cached_generators(2)));
  }
  if (name == "near-pure-spin-one")
    return make(name, "spin_one", rotated_diagonal(Vector{{0.98, 0.015, 0.005}}, 11));
  throw InvalidArgument("unknown preset: " + name);
}

std::string default_preset_for(const std::string& system) {
  if (system == "spin_half") return "reference-spin-half";
  if (system == "spin_one") return "reference-spin-one";
  throw InvalidArgument("unknown system: " + system + " (expected spin_half or spin_one)");
}

}  // namespace qtomo
