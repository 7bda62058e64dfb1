#include "qtomo/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qtomo {

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

Json basis_set_to_json(const BasisSet& bases) {
  Json j;
  j["kind"] = to_string(bases.kind());
  j["N"] = bases.dim();
  Json list = Json::array();
  for (const auto& b : bases.bases()) {
    Json rows = Json::array();
    for (int i = 0; i < b.dim(); ++i) {
      Json row = Json::array();
      for (int c = 0; c < b.dim(); ++c) row.push_back({b.vectors(i, c).real(), b.vectors(i, c).imag()});
      rows.push_back(std::move(row));
    }
    list.push_back(std::move(rows));
  }
  j["bases"] = std::move(list);
  return j;
}

BasisSet basis_set_from_json(const Json& j) {
  try {
    const int dim = j.at("N").get<int>();
    require(dim == 2 || dim == 3, "basis JSON: N must be 2 or 3");
    const BasisKind kind = j.contains("kind") ? basis_kind_from_string(j.at("kind").get<std::string>())
                                              : BasisKind::kCustom;
    std::vector<MeasurementBasis> bases;
    int label = 0;
    for (const auto& jb : j.at("bases")) {
      require(jb.size() == static_cast<std::size_t>(dim), "basis JSON: basis must have N rows");
      MeasurementBasis b;
      b.label = label++;
      b.vectors.resize(dim, dim);
      for (int i = 0; i < dim; ++i) {
        require(jb[i].size() == static_cast<std::size_t>(dim), "basis JSON: row must have N entries");
        for (int c = 0; c < dim; ++c)
          b.vectors(i, c) = Complex(jb[i][c].at(0).get<double>(), jb[i][c].at(1).get<double>());
      }
      bases.push_back(std::move(b));
    }
    return BasisSet(kind, std::move(bases));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("basis JSON: ") + e.what());
  }
}

std::string basis_hash(const BasisSet& bases) {
  const std::string text = basis_set_to_json(bases).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::string sample_records_csv(const Sample& sample) {
  require(!sample.records().empty() || sample.total() == 0.0, "sample_records_csv: sample has no records");
  std::string out = "basis,outcome\n";
  for (const auto& rec : sample.records()) out += std::to_string(rec.basis) + "," + std::to_string(rec.outcome) + "\n";
  return out;
}

std::string sample_counts_csv(const Sample& sample) {
  std::string out = "basis,outcome,count\n";
  for (int r = 0; r < sample.counts().rows(); ++r)
    for (int i = 0; i < sample.counts().cols(); ++i)
      out += std::to_string(r) + "," + std::to_string(i + 1) + "," + format_number(sample.counts()(r, i)) + "\n";
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("CSV: not a number: '" + s + "'");
  }
  require(used == s.size(), "CSV: trailing characters in '" + s + "'");
  return v;
}

}  // namespace

Sample sample_from_csv(const std::string& text, std::shared_ptr<const BasisSet> bases) {
  require(bases != nullptr, "sample_from_csv: basis set required");
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "sample CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool counts_layout = line == "basis,outcome,count";
  require(counts_layout || line == "basis,outcome", "sample CSV: unexpected header '" + line + "'");
  std::vector<ObservationRecord> records;
  Matrix counts = Matrix::Zero(bases->size(), bases->dim());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    require(cells.size() == (counts_layout ? 3u : 2u), "sample CSV: wrong column count in '" + line + "'");
    const double basis = parse_double(cells[0]);
    const double outcome = parse_double(cells[1]);
    require(basis == std::floor(basis) && outcome == std::floor(outcome), "sample CSV: indices must be integers");
    ObservationRecord rec{static_cast<int>(basis), static_cast<int>(outcome)};
    require(rec.basis >= 0 && rec.basis < bases->size(), "sample CSV: basis out of range");
    require(rec.outcome >= 1 && rec.outcome <= bases->dim(), "sample CSV: outcome out of range");
    if (counts_layout) counts(rec.basis, rec.outcome - 1) += parse_double(cells[2]);
    else records.push_back(rec);
  }
  if (counts_layout) return Sample(std::move(bases), std::move(counts));
  return Sample::from_records(std::move(bases), std::move(records));
}

Json sample_to_json(const Sample& sample, const SampleMetadata& meta) {
  Json j;
  j["rng"] = meta.rng;
  j["seed"] = meta.seed;
  j["m"] = meta.m;
  j["basis_hash"] = meta.basis_hash;
  Json counts = Json::array();
  for (int r = 0; r < sample.counts().rows(); ++r) {
    Json row = Json::array();
    for (int i = 0; i < sample.counts().cols(); ++i) row.push_back(sample.counts()(r, i));
    counts.push_back(std::move(row));
  }
  j["counts"] = std::move(counts);
  return j;
}

Sample sample_from_json(const Json& j, std::shared_ptr<const BasisSet> bases) {
  require(bases != nullptr, "sample_from_json: basis set required");
  try {
    const auto& rows = j.at("counts");
    require(rows.size() == static_cast<std::size_t>(bases->size()), "sample JSON: one count row per basis");
    Matrix counts(bases->size(), bases->dim());
    for (int r = 0; r < bases->size(); ++r) {
      require(rows[r].size() == static_cast<std::size_t>(bases->dim()), "sample JSON: N counts per basis");
      for (int i = 0; i < bases->dim(); ++i) counts(r, i) = rows[r][i].get<double>();
    }
    return Sample(std::move(bases), std::move(counts));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("sample JSON: ") + e.what());
  }
}

namespace {

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

Json estimation_result_to_json(const EstimationResult& result, const AsymptoticCovariance* sigma) {
  Json j;
  j["theta_hat"] = vector_json(result.theta_hat.theta);
  j["converged"] = result.converged;
  j["physical"] = result.physical;
  j["method"] = to_string(result.method);
  j["scaled_loglik"] = result.scaled_loglik;
  j["residual_norm"] = result.residual_norm;
  j["iterations"] = result.iterations;
  j["starts_tried"] = result.starts_tried;
  j["singular_jacobian"] = result.singular_jacobian;
  j["min_eigenvalue"] = min_eigenvalue(result.rho_hat);
  j["eigenvalues"] = vector_json(hermitian_eigen(result.rho_hat).eigenvalues);
  j["lambda"] = vector_json(result.state.lambda);
  j["gamma"] = vector_json(result.state.gamma);
  if (!result.diagnostics.empty()) j["diagnostics"] = result.diagnostics;
  if (sigma != nullptr) {
    const Vector se = sigma->standard_errors();
    Json inf;
    inf["se"] = vector_json(se);
    Json cis = Json::array();
    for (Eigen::Index k = 0; k < se.size(); ++k) {
      const auto ci = confidence_interval(result.theta_hat[static_cast<int>(k)], se[k], 0.95);
      cis.push_back({ci.lower, ci.upper});
    }
    inf["ci95"] = std::move(cis);
    Json cov = Json::array();
    for (Eigen::Index r = 0; r < sigma->sigma.rows(); ++r) cov.push_back(vector_json(sigma->sigma.row(r).transpose()));
    inf["covariance"] = std::move(cov);
    j["inference"] = std::move(inf);
  }
  return j;
}

std::string summary_csv_header() {
  return "panel,m,quantity,truth,mean,bias,std,rmse,median,q025,q975,asym_estimate,asym_se,asym_ci_lower,"
         "asym_ci_upper,median_asym_se,retained,total\n";
}

std::string summary_csv_rows(const McSummary& summary, const std::string& panel, int m) {
  std::string out;
  for (const auto& r : summary.rows) {
    out += panel + "," + std::to_string(m) + "," + r.name;
    for (double v : {r.truth, r.mean, r.bias, r.std, r.rmse, r.median, r.q025, r.q975}) out += "," + format_number(v);
    if (r.asymptotic_available) {
      for (double v : {r.asymptotic_estimate, r.asymptotic_se, r.asymptotic_ci.lower, r.asymptotic_ci.upper})
        out += "," + format_number(v);
    } else {
      out += ",,,,";
    }
    out += "," + format_number(r.median_asymptotic_se);
    out += "," + std::to_string(summary.retained) + "," + std::to_string(summary.total) + "\n";
  }
  return out;
}

std::string size_power_csv_header() {
  return "panel,m,hypothesis,kind,df,critical_value,size,power,finite_lower,finite_upper,count,skipped\n";
}

std::string size_power_csv_row(const SizePowerReport& report, const std::string& panel, int m) {
  std::string out = panel + "," + std::to_string(m) + "," + report.name + "," +
                    (report.kind == TestKind::kT ? "T" : "WALD") + "," + std::to_string(report.df);
  for (double v : {report.size.critical_value, report.size.rejection_rate, report.power.rejection_rate,
                   report.size.finite_lower, report.size.finite_upper})
    out += "," + format_number(v);
  out += "," + std::to_string(report.size.count) + "," + std::to_string(report.skipped) + "\n";
  return out;
}

std::string replications_csv(const std::vector<Replication>& results) {
  std::string out = "index,seed,converged,physical,method,scaled_loglik,min_eigenvalue";
  const int n = results.empty() ? 0 : results.front().result.theta_hat.size();
  for (int j = 0; j < n; ++j) out += ",theta" + std::to_string(j + 1);
  out += "\n";
  for (const auto& r : results) {
    out += std::to_string(r.index) + "," + std::to_string(r.seed) + "," + (r.result.converged ? "1" : "0") + "," +
           (r.result.physical ? "1" : "0") + "," + to_string(r.result.method) + "," +
           format_number(r.result.scaled_loglik) + ",";
    out += r.result.rho_hat.dim() > 0 ? format_number(min_eigenvalue(r.result.rho_hat)) : std::string();
    for (int j = 0; j < n; ++j)
      out += "," + (r.result.theta_hat.size() == n ? format_number(r.result.theta_hat[j]) : std::string());
    out += "\n";
  }
  return out;
}

std::string kde_csv(const KdeEstimate& estimate) {
  std::string out = "x,density\n";
  for (std::size_t g = 0; g < estimate.grid.size(); ++g)
    out += format_number(estimate.grid[g]) + "," + format_number(estimate.density[g]) + "\n";
  return out;
}

std::string kde_svg(const KdeEstimate& estimate, const std::string& title) {
  constexpr double kWidth = 480.0;
  constexpr double kHeight = 320.0;
  constexpr double kPad = 30.0;
  const double x0 = estimate.grid.front();
  const double x1 = estimate.grid.back();
  double ymax = 0.0;
  for (double d : estimate.density) ymax = std::max(ymax, d);
  if (ymax <= 0.0) ymax = 1.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  out << "<text x=\"" << kPad << "\" y=\"18\" font-size=\"12\">" << title << "</text>\n";
  out << "<polyline fill=\"none\" stroke=\"black\" points=\"";
  for (std::size_t g = 0; g < estimate.grid.size(); ++g) {
    const double x = kPad + (estimate.grid[g] - x0) / (x1 - x0) * (kWidth - 2 * kPad);
    const double y = kHeight - kPad - estimate.density[g] / ymax * (kHeight - 2 * kPad);
    out << format_number(x) << "," << format_number(y) << " ";
  }
  out << "\"/>\n</svg>\n";
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace qtomo
