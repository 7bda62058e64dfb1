#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qtomo/presets.hpp"
#include "qtomo/serialization.hpp"

namespace qtomo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitConvergenceFailure = 3;
inline constexpr int kExitIoError = 4;

/// Where the measurement bases come from: "mub", "mbb" (generated from
/// alpha and basis_seed), "appendix" (printed spin-1 fixture) or "file".
struct BasisSource {
  std::string kind = "mub";
  double alpha = 1.2;
  std::uint64_t seed = 7;
  bool include_identity = false;
  std::string file;
};

struct RunConfig {
  std::string system = "spin_half";
  std::string preset;  // empty: default preset of `system`
  std::optional<Vector> theta;
  BasisSource bases;
  std::vector<int> m = {100};
  int q = 1000;
  std::uint64_t seed = 1;
  bool filter = true;
  std::string out = "qtomo-out";
  std::set<std::string> emit = {"tables"};
  int threads = 0;
  EstimationConfig estimation;
  CovarianceScaling scaling = CovarianceScaling::kTotalInformation;
  FisherKind fisher = FisherKind::kHessian;
  /// estimate only: input sample (CSV or JSON); `perfect` uses exact frequencies instead.
  std::string sample;
  bool perfect = false;

  int dim() const { return system == "spin_one" ? 3 : 2; }
};

/// Overlays the fields present in `j` onto `cfg` (unknown keys rejected).
void apply_config_json(const Json& j, RunConfig& cfg);
Json run_config_to_json(const RunConfig& cfg);

/// Checks every field against module preconditions; throws InvalidArgument.
void validate_run_config(const RunConfig& cfg);

/// The true state selected by the config (explicit theta or preset).
DensityMatrix true_state(const RunConfig& cfg);
std::shared_ptr<const BasisSet> resolve_bases(const RunConfig& cfg);

/// Entry point; returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace qtomo
