#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "qtomo/harness.hpp"

namespace qtomo {

using Json = nlohmann::ordered_json;

/// %.6g formatting used for every number written to text artifacts.
std::string format_number(double value);

/// {"kind": ..., "N": ..., "bases": [[[ [re, im], ... ], ...], ...]}; bases[r][i][c]
/// is row i, column c of basis r.
Json basis_set_to_json(const BasisSet& bases);
BasisSet basis_set_from_json(const Json& j);

/// FNV-1a over the basis JSON text (full precision), hex encoded.
std::string basis_hash(const BasisSet& bases);

struct SampleMetadata {
  std::string rng = kRngAlgorithm;
  RngSeed seed = 0;
  int m = 0;
  std::string basis_hash;
};

/// Header "basis,outcome" (0-based basis, 1-based outcome), one row per record.
std::string sample_records_csv(const Sample& sample);

/// Header "basis,outcome,count", one row per cell; works for fractional counts.
std::string sample_counts_csv(const Sample& sample);

/// Reads either CSV layout back into a Sample over `bases`.
Sample sample_from_csv(const std::string& text, std::shared_ptr<const BasisSet> bases);

Json sample_to_json(const Sample& sample, const SampleMetadata& meta);
Sample sample_from_json(const Json& j, std::shared_ptr<const BasisSet> bases);

/// Result JSON; `sigma` adds an inference block (se and 95% intervals).
Json estimation_result_to_json(const EstimationResult& result, const AsymptoticCovariance* sigma = nullptr);

std::string summary_csv_header();
/// One line per summary row, prefixed by the panel label and m.
std::string summary_csv_rows(const McSummary& summary, const std::string& panel, int m);

std::string size_power_csv_header();
std::string size_power_csv_row(const SizePowerReport& report, const std::string& panel, int m);

/// Per-replication dump: index, seed, converged, physical, method, loglik, theta...
std::string replications_csv(const std::vector<Replication>& results);

std::string kde_csv(const KdeEstimate& estimate);

/// Minimal SVG line plot of a KDE grid.
std::string kde_svg(const KdeEstimate& estimate, const std::string& title);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// I/O failure (unreadable input, unwritable output).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qtomo
