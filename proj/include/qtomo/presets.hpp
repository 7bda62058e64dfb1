#pragma once

#include <string>
#include <vector>

#include "qtomo/harness.hpp"

namespace qtomo {

/// A named true state plus the hypotheses tested against it.
struct SystemPreset {
  std::string name;
  std::string system;  // "spin_half" or "spin_one"
  DensityMatrix rho0;
  std::vector<HypothesisSpec> hypotheses;

  int dim() const { return rho0.dim(); }
  BlochVector theta() const { return density_to_bloch(rho0, cached_generators(dim())); }
};

/// "reference-spin-half", "reference-spin-one", "near-pure-spin-half", "near-pure-spin-one".
std::vector<std::string> preset_names();
SystemPreset find_preset(const std::string& name);

/// Default preset for a system name ("spin_half" | "spin_one").
std::string default_preset_for(const std::string& system);

/// Hypotheses for an arbitrary true theta, following the preset layout of its system.
std::vector<HypothesisSpec> default_hypotheses(const BlochVector& theta);

}  // namespace qtomo
