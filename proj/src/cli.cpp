#include "qtomo/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#ifndef QTOMO_VERSION
#define QTOMO_VERSION "0.0.0"
#endif

namespace qtomo {

namespace {

const std::set<std::string> kEmitFlags = {"tables", "kde", "svg", "raw"};

std::set<std::string> parse_emit(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    require(kEmitFlags.count(item) == 1, "unknown --emit entry '" + item + "' (tables, kde, svg, raw)");
    out.insert(item);
  }
  return out;
}

bool parse_on_off(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw InvalidArgument("--filter expects on|off, got '" + v + "'");
}

CovarianceScaling parse_scaling(const std::string& v) {
  if (v == "total_information") return CovarianceScaling::kTotalInformation;
  if (v == "per_observation") return CovarianceScaling::kPerObservation;
  throw InvalidArgument("scaling must be total_information or per_observation, got '" + v + "'");
}

std::string scaling_name(CovarianceScaling s) {
  return s == CovarianceScaling::kTotalInformation ? "total_information" : "per_observation";
}

FisherKind parse_fisher(const std::string& v) {
  if (v == "hessian") return FisherKind::kHessian;
  if (v == "opg") return FisherKind::kOpg;
  throw InvalidArgument("fisher must be hessian or opg, got '" + v + "'");
}

void apply_estimation_json(const Json& j, EstimationConfig& e) {
  for (const auto& [key, value] : j.items()) {
    if (key == "residual_tolerance") e.residual_tolerance = value.get<double>();
    else if (key == "likelihood_tolerance") e.likelihood_tolerance = value.get<double>();
    else if (key == "max_newton_iters") e.max_newton_iters = value.get<int>();
    else if (key == "max_backtracks") e.max_backtracks = value.get<int>();
    else if (key == "bfgs_max_iters") e.bfgs_max_iters = value.get<int>();
    else if (key == "annealing_steps") e.annealing_steps = value.get<int>();
    else if (key == "annealing_initial_fraction") e.annealing_initial_fraction = value.get<double>();
    else if (key == "annealing_decay") e.annealing_decay = value.get<double>();
    else if (key == "multistart_count") e.multistart_count = value.get<int>();
    else throw InvalidArgument("config: unknown estimation key '" + key + "'");
  }
}

}  // namespace

void apply_config_json(const Json& j, RunConfig& cfg) {
  require(j.is_object(), "config: top level must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "system") cfg.system = value.get<std::string>();
      else if (key == "preset") cfg.preset = value.get<std::string>();
      else if (key == "theta") {
        const auto v = value.get<std::vector<double>>();
        cfg.theta = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
      } else if (key == "bases") {
        for (const auto& [bk, bv] : value.items()) {
          if (bk == "kind") cfg.bases.kind = bv.get<std::string>();
          else if (bk == "alpha") cfg.bases.alpha = bv.get<double>();
          else if (bk == "seed") cfg.bases.seed = bv.get<std::uint64_t>();
          else if (bk == "include_identity") cfg.bases.include_identity = bv.get<bool>();
          else if (bk == "file") cfg.bases.file = bv.get<std::string>();
          else throw InvalidArgument("config: unknown bases key '" + bk + "'");
        }
      } else if (key == "m") {
        cfg.m = value.is_array() ? value.get<std::vector<int>>() : std::vector<int>{value.get<int>()};
      } else if (key == "q") cfg.q = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "filter") cfg.filter = value.is_boolean() ? value.get<bool>() : parse_on_off(value.get<std::string>());
      else if (key == "out") cfg.out = value.get<std::string>();
      else if (key == "emit") {
        if (value.is_array()) {
          std::string text;
          for (const auto& e : value) text += e.get<std::string>() + ",";
          cfg.emit = parse_emit(text);
        } else {
          cfg.emit = parse_emit(value.get<std::string>());
        }
      } else if (key == "threads") cfg.threads = value.get<int>();
      else if (key == "scaling") cfg.scaling = parse_scaling(value.get<std::string>());
      else if (key == "fisher") cfg.fisher = parse_fisher(value.get<std::string>());
      else if (key == "estimation") apply_estimation_json(value, cfg.estimation);
      else if (key == "sample") cfg.sample = value.get<std::string>();
      else if (key == "perfect") cfg.perfect = value.get<bool>();
      else throw InvalidArgument("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

Json run_config_to_json(const RunConfig& cfg) {
  Json j;
  j["system"] = cfg.system;
  j["preset"] = cfg.preset.empty() && !cfg.theta ? default_preset_for(cfg.system) : cfg.preset;
  Json theta = Json::array();
  const BlochVector t = density_to_bloch(true_state(cfg), cached_generators(cfg.dim()));
  for (int k = 0; k < t.size(); ++k) theta.push_back(t[k]);
  j["theta"] = theta;
  j["bases"] = {{"kind", cfg.bases.kind},
                {"alpha", cfg.bases.alpha},
                {"seed", cfg.bases.seed},
                {"include_identity", cfg.bases.include_identity},
                {"file", cfg.bases.file}};
  j["m"] = cfg.m;
  j["q"] = cfg.q;
  j["seed"] = cfg.seed;
  j["filter"] = cfg.filter;
  j["out"] = cfg.out;
  j["emit"] = std::vector<std::string>(cfg.emit.begin(), cfg.emit.end());
  j["threads"] = cfg.threads;
  j["scaling"] = scaling_name(cfg.scaling);
  j["fisher"] = cfg.fisher == FisherKind::kHessian ? "hessian" : "opg";
  const auto& e = cfg.estimation;
  j["estimation"] = {{"residual_tolerance", e.residual_tolerance},
                     {"likelihood_tolerance", e.likelihood_tolerance},
                     {"max_newton_iters", e.max_newton_iters},
                     {"max_backtracks", e.max_backtracks},
                     {"bfgs_max_iters", e.bfgs_max_iters},
                     {"annealing_steps", e.annealing_steps},
                     {"annealing_initial_fraction", e.annealing_initial_fraction},
                     {"annealing_decay", e.annealing_decay},
                     {"multistart_count", e.multistart_count}};
  if (!cfg.sample.empty()) j["sample"] = cfg.sample;
  if (cfg.perfect) j["perfect"] = true;
  return j;
}

DensityMatrix true_state(const RunConfig& cfg) {
  if (cfg.theta) return bloch_to_density(BlochVector(*cfg.theta), cached_generators(cfg.dim()));
  return find_preset(cfg.preset.empty() ? default_preset_for(cfg.system) : cfg.preset).rho0;
}

std::shared_ptr<const BasisSet> resolve_bases(const RunConfig& cfg) {
  const int dim = cfg.dim();
  const auto& b = cfg.bases;
  if (b.kind == "mub") return std::make_shared<const BasisSet>(mub_bases(dim));
  if (b.kind == "mbb") {
    MbbOptions opts;
    opts.alpha = b.alpha;
    opts.seed = b.seed;
    return std::make_shared<const BasisSet>(generate_mbb(mub_bases(dim), opts));
  }
  if (b.kind == "appendix") return std::make_shared<const BasisSet>(appendix_mbb(b.include_identity));
  if (b.kind == "file") {
    auto set = basis_set_from_json(Json::parse(read_text_file(b.file)));
    require(set.dim() == dim, "basis file dimension does not match the system");
    return std::make_shared<const BasisSet>(std::move(set));
  }
  throw InvalidArgument("unknown basis source '" + b.kind + "' (mub, mbb, appendix, file)");
}

void validate_run_config(const RunConfig& cfg) {
  require(cfg.system == "spin_half" || cfg.system == "spin_one", "system must be spin_half or spin_one");
  if (!cfg.preset.empty()) {
    const auto p = find_preset(cfg.preset);
    require(p.system == cfg.system, "preset " + cfg.preset + " belongs to system " + p.system);
  }
  const int dim = cfg.dim();
  if (cfg.theta) {
    require(cfg.theta->size() == dim * dim - 1, "theta must have N^2 - 1 entries");
    require(cfg.theta->allFinite(), "theta must be finite");
    require(is_physical(bloch_to_density(BlochVector(*cfg.theta), cached_generators(dim))),
            "theta is not a physical state");
  }
  const auto& b = cfg.bases;
  require(b.kind == "mub" || b.kind == "mbb" || b.kind == "appendix" || b.kind == "file",
          "bases must be mub, mbb, appendix or file");
  if (b.kind == "mbb") require(b.alpha >= 1.0 && std::isfinite(b.alpha), "alpha must be at least 1");
  if (b.kind == "appendix") require(dim == 3, "the appendix fixture is a spin-1 basis set");
  if (b.kind == "file") require(!b.file.empty(), "--basis-file is required with --bases file");
  require(!cfg.m.empty(), "at least one m is required");
  int n_bases = dim + 1;
  if (b.kind == "appendix") n_bases = b.include_identity ? 5 : 4;
  for (int m : cfg.m) require(m >= n_bases, "m must be at least the number of bases");
  require(cfg.q >= 1, "q must be at least 1");
  require(cfg.threads >= 0, "threads must be non-negative");
  require(!cfg.out.empty(), "out must be a directory path");
  for (const auto& e : cfg.emit) require(kEmitFlags.count(e) == 1, "unknown emit entry " + e);
  cfg.estimation.validate();
}

namespace {

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
  Json files = Json::array();

  std::string path(const std::string& name) const { return (std::filesystem::path(cfg.out) / name).string(); }

  void write(const std::string& name, const std::string& text) {
    write_text_file(path(name), text);
    files.push_back(name);
  }
};

void ensure_out_dir(const Context& ctx) {
  std::error_code ec;
  std::filesystem::create_directories(ctx.cfg.out, ec);
  if (ec) throw IoError("cannot create output directory " + ctx.cfg.out + ": " + ec.message());
}

Json manifest_base(const Context& ctx, const std::string& command, const BasisSet& bases) {
  Json j;
  j["command"] = command;
  j["version"] = QTOMO_VERSION;
  j["rng"] = kRngAlgorithm;
  j["config"] = run_config_to_json(ctx.cfg);
  j["basis_hash"] = basis_hash(bases);
  return j;
}

void write_manifest(Context& ctx, Json manifest) {
  manifest["files"] = ctx.files;
  write_text_file(ctx.path("manifest.json"), manifest.dump(2) + "\n");
}

int cmd_bases(Context& ctx) {
  const auto bases = resolve_bases(ctx.cfg);
  ensure_out_dir(ctx);
  ctx.write("bases.json", basis_set_to_json(*bases).dump(2) + "\n");
  const double deviation = verify_mub(*bases);
  ctx.out << "kind " << to_string(bases->kind()) << " N " << bases->dim() << " bases " << bases->size() << "\n";
  ctx.out << "mub_deviation " << format_number(deviation) << "\n";
  ctx.out << "max_cross_modulus " << format_number(max_cross_modulus(*bases)) << "\n";
  Json manifest = manifest_base(ctx, "bases", *bases);
  manifest["mub_deviation"] = deviation;
  write_manifest(ctx, manifest);
  return kExitOk;
}

int cmd_simulate(Context& ctx) {
  const auto rho0 = true_state(ctx.cfg);
  const auto bases = resolve_bases(ctx.cfg);
  ensure_out_dir(ctx);
  Json manifest = manifest_base(ctx, "simulate", *bases);
  Json samples = Json::array();
  for (int m : ctx.cfg.m) {
    const Sample sample = simulate_sample(rho0, bases, m, ctx.cfg.seed);
    const std::string stem = "sample_m" + std::to_string(m);
    ctx.write(stem + ".csv", sample_records_csv(sample));
    SampleMetadata meta{kRngAlgorithm, ctx.cfg.seed, m, basis_hash(*bases)};
    ctx.write(stem + ".json", sample_to_json(sample, meta).dump(2) + "\n");
    ctx.out << "m " << m << " per-basis";
    for (int r = 0; r < bases->size(); ++r) ctx.out << " " << format_number(sample.basis_total(r));
    ctx.out << "\n";
    samples.push_back({{"m", m}, {"seed", ctx.cfg.seed}});
  }
  manifest["samples"] = samples;
  write_manifest(ctx, manifest);
  return kExitOk;
}

Sample load_sample(const std::string& path, std::shared_ptr<const BasisSet> bases) {
  const std::string text = read_text_file(path);
  if (std::filesystem::path(path).extension() == ".json") {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("sample JSON: ") + e.what());
    }
    if (j.contains("basis_hash") && !j["basis_hash"].get<std::string>().empty())
      require(j["basis_hash"].get<std::string>() == basis_hash(*bases), "sample was recorded with a different basis set");
    return sample_from_json(j, std::move(bases));
  }
  return sample_from_csv(text, std::move(bases));
}

int cmd_estimate(Context& ctx) {
  const auto rho0 = true_state(ctx.cfg);
  const auto bases = resolve_bases(ctx.cfg);
  const bool from_file = !ctx.cfg.sample.empty();
  Sample sample = from_file ? load_sample(ctx.cfg.sample, bases)
                  : ctx.cfg.perfect ? expected_sample(rho0, bases, ctx.cfg.m.front())
                                    : simulate_sample(rho0, bases, ctx.cfg.m.front(), ctx.cfg.seed);
  ensure_out_dir(ctx);
  EstimationConfig ecfg = ctx.cfg.estimation;
  ecfg.seed = ctx.cfg.seed;
  const auto result = estimate(sample, ecfg);

  std::optional<AsymptoticCovariance> sigma;
  std::string inference_note;
  if (result.converged && result.physical) {
    try {
      const auto fisher = ctx.cfg.fisher == FisherKind::kHessian ? observed_fisher_hessian(result.theta_hat, sample)
                                                                 : observed_fisher_opg(result.theta_hat, sample);
      sigma = asymptotic_covariance(fisher, ctx.cfg.scaling);
    } catch (const NumericalError& e) {
      inference_note = e.what();
    }
  }
  Json j = estimation_result_to_json(result, sigma ? &*sigma : nullptr);
  j["m"] = sample.total();
  if (sigma) {
    j["inference"]["scaling"] = scaling_name(ctx.cfg.scaling);
    j["inference"]["fisher"] = ctx.cfg.fisher == FisherKind::kHessian ? "hessian" : "opg";
  } else if (!inference_note.empty()) {
    j["inference_unavailable"] = inference_note;
  }
  if (!from_file && result.physical) j["fidelity"] = fidelity(result.rho_hat, rho0);
  try {
    const auto mm = tomographic_inversion(sample);
    const auto rho_mm = bloch_to_density(mm.theta, cached_generators(sample.bases().dim()));
    Json mmj;
    Json theta = Json::array();
    for (int k = 0; k < mm.theta.size(); ++k) theta.push_back(mm.theta[k]);
    mmj["theta"] = theta;
    mmj["admissible"] = mm.admissible;
    mmj["physical"] = is_physical(rho_mm);
    mmj["min_eigenvalue"] = min_eigenvalue(rho_mm);
    if (!mm.admissible) mmj["flag"] = "unphysical moment estimate";
    j["moment_estimate"] = mmj;
  } catch (const NumericalError& e) {
    j["moment_estimate"] = {{"error", e.what()}};
  }
  ctx.write("result.json", j.dump(2) + "\n");

  ctx.out << "converged " << (result.converged ? "yes" : "no") << " method " << to_string(result.method)
          << " physical " << (result.physical ? "yes" : "no") << "\n";
  ctx.out << "theta_hat";
  for (int k = 0; k < result.theta_hat.size(); ++k) ctx.out << " " << format_number(result.theta_hat[k]);
  ctx.out << "\n";
  if (sigma) {
    ctx.out << "se";
    const Vector se = sigma->standard_errors();
    for (Eigen::Index k = 0; k < se.size(); ++k) ctx.out << " " << format_number(se[k]);
    ctx.out << "\n";
  }
  if (j.contains("fidelity")) ctx.out << "fidelity " << format_number(j["fidelity"].get<double>()) << "\n";
  Json manifest = manifest_base(ctx, "estimate", *bases);
  manifest["converged"] = result.converged;
  write_manifest(ctx, manifest);
  if (!result.converged) {
    ctx.err << "estimation did not converge: " << result.diagnostics << "\n";
    return kExitConvergenceFailure;
  }
  return kExitOk;
}

std::string panel_label(std::size_t i) {
  return i < 26 ? std::string(1, static_cast<char>('A' + i)) : "P" + std::to_string(i + 1);
}

std::vector<Replication> with_estimates(const std::vector<Replication>& reps) {
  std::vector<Replication> out;
  for (const auto& r : reps)
    if (r.result.theta_hat.size() > 0 && r.result.rho_hat.dim() > 0) out.push_back(r);
  return out;
}

void emit_kde(Context& ctx, const std::vector<Replication>& reps, int m, const std::string& tag) {
  if (reps.size() < 2) return;
  const int n = reps.front().result.theta_hat.size();
  for (int j = 0; j < n; ++j) {
    std::vector<double> values;
    for (const auto& r : reps) values.push_back(r.result.theta_hat[j]);
    KdeEstimate est;
    try {
      est = kde(values);
    } catch (const InvalidArgument&) {
      continue;
    }
    const std::string stem = "kde_" + tag + "m" + std::to_string(m) + "_theta" + std::to_string(j + 1);
    if (ctx.cfg.emit.count("kde")) ctx.write(stem + ".csv", kde_csv(est));
    if (ctx.cfg.emit.count("svg")) ctx.write(stem + ".svg", kde_svg(est, stem));
  }
}

int cmd_mc(Context& ctx, bool tests_only) {
  const auto rho0 = true_state(ctx.cfg);
  const auto bases = resolve_bases(ctx.cfg);
  ensure_out_dir(ctx);
  const BlochVector theta0 = density_to_bloch(rho0, cached_generators(ctx.cfg.dim()));
  const std::string preset = ctx.cfg.preset.empty() ? default_preset_for(ctx.cfg.system) : ctx.cfg.preset;
  const auto hypotheses = ctx.cfg.theta ? default_hypotheses(theta0) : find_preset(preset).hypotheses;

  std::string summary = summary_csv_header();
  std::string unfiltered = summary_csv_header();
  std::string tests = size_power_csv_header();
  Json runs = Json::array();
  for (std::size_t p = 0; p < ctx.cfg.m.size(); ++p) {
    const int m = ctx.cfg.m[p];
    McConfig mc;
    mc.rho0 = rho0;
    mc.bases = bases;
    mc.m = m;
    mc.q = ctx.cfg.q;
    mc.base_seed = ctx.cfg.seed;
    mc.filter_unphysical = ctx.cfg.filter;
    mc.estimation = ctx.cfg.estimation;
    mc.covariance_scaling = ctx.cfg.scaling;
    mc.threads = ctx.cfg.threads;
    const auto reps = run_monte_carlo(mc);
    const auto filtered = filter_physical(reps);
    const std::string panel = panel_label(p);

    Json run = {{"panel", panel},
                {"m", m},
                {"q", ctx.cfg.q},
                {"first_seed", ctx.cfg.seed},
                {"last_seed", ctx.cfg.seed + static_cast<std::uint64_t>(ctx.cfg.q - 1)},
                {"retained", filtered.retained_count()},
                {"unphysical", filtered.unphysical},
                {"unconverged", filtered.unconverged},
                {"filtered_fraction", filtered.filtered_fraction()}};
    ctx.out << "panel " << panel << " m " << m << " retained " << filtered.retained_count() << "/" << filtered.total
            << " unphysical " << filtered.unphysical << " unconverged " << filtered.unconverged << "\n";

    if (!tests_only && filtered.retained_count() >= 2) {
      auto s = summarize(filtered.retained, rho0);
      s.total = filtered.total;
      run["asymptotic_index"] = s.asymptotic_index >= 0 ? filtered.retained[s.asymptotic_index].index : -1;
      summary += summary_csv_rows(s, panel, m);
      for (const auto& row : s.rows)
        ctx.out << "  " << row.name << " bias " << format_number(row.bias) << " std " << format_number(row.std)
                << " rmse " << format_number(row.rmse) << " ce [" << format_number(row.q025) << ", "
                << format_number(row.q975) << "]\n";
      if (!ctx.cfg.filter) {
        const auto all = with_estimates(reps);
        if (all.size() >= 2) {
          auto u = summarize(all, rho0);
          u.total = filtered.total;
          unfiltered += summary_csv_rows(u, panel, m);
        }
      }
    }
    for (const auto& h : hypotheses) {
      const auto report = test_size_power(filtered.retained, h);
      tests += size_power_csv_row(report, panel, m);
      ctx.out << "  test " << report.name << " size " << format_number(report.size.rejection_rate) << " power "
              << format_number(report.power.rejection_rate) << " critical " << format_number(report.size.critical_value)
              << "\n";
    }
    if (!tests_only) {
      emit_kde(ctx, filtered.retained, m, "");
      if (!ctx.cfg.filter) emit_kde(ctx, with_estimates(reps), m, "unfiltered_");
      if (ctx.cfg.emit.count("raw")) ctx.write("replications_m" + std::to_string(m) + ".csv", replications_csv(reps));
    }
    runs.push_back(run);
  }
  if (!tests_only && ctx.cfg.emit.count("tables")) {
    ctx.write("summary.csv", summary);
    if (!ctx.cfg.filter) ctx.write("summary_unfiltered.csv", unfiltered);
  }
  if (tests_only || ctx.cfg.emit.count("tables")) ctx.write("size_power.csv", tests);
  Json manifest = manifest_base(ctx, tests_only ? "test" : "mc", *bases);
  manifest["runs"] = runs;
  write_manifest(ctx, manifest);
  return kExitOk;
}

struct Flags {
  std::string config;
  std::string system;
  std::string preset;
  std::vector<double> theta;
  std::string bases;
  int n = 0;
  std::string kind;
  double alpha = 0.0;
  std::uint64_t basis_seed = 0;
  std::string basis_file;
  bool with_identity = false;
  std::vector<int> m;
  int q = 0;
  std::uint64_t seed = 0;
  std::string filter;
  std::string out;
  std::string emit;
  int threads = 0;
  std::string scaling;
  std::string fisher;
  std::string sample;
  bool perfect = false;
  double tolerance = 0.0;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--system", f.system, "spin_half | spin_one");
  sub->add_option("--preset", f.preset, "named true state");
  sub->add_option("--theta", f.theta, "true Bloch vector (comma separated)")->delimiter(',');
  sub->add_option("--bases", f.bases, "mub | mbb | appendix | file");
  sub->add_option("--n", f.n, "Hilbert-space dimension (2 or 3)");
  sub->add_option("--kind", f.kind, "alias of --bases");
  sub->add_option("--alpha", f.alpha, "MBB bias threshold");
  sub->add_option("--basis-seed", f.basis_seed, "seed for generated MBB axes");
  sub->add_option("--basis-file", f.basis_file, "basis-set JSON");
  sub->add_flag("--with-identity", f.with_identity, "prepend the computational basis to the appendix fixture");
  sub->add_option("--m", f.m, "sample size(s), comma separated")->delimiter(',');
  sub->add_option("--q", f.q, "replications");
  sub->add_option("--seed", f.seed, "base seed");
  sub->add_option("--filter", f.filter, "on | off");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--emit", f.emit, "tables,kde,svg,raw");
  sub->add_option("--threads", f.threads, "worker threads (0: QTOMO_THREADS or all cores)");
  sub->add_option("--scaling", f.scaling, "total_information | per_observation");
  sub->add_option("--fisher", f.fisher, "hessian | opg");
  sub->add_option("--sample", f.sample, "input sample (CSV or JSON)");
  sub->add_flag("--perfect", f.perfect, "estimate from exact Born frequencies");
  sub->add_option("--tolerance", f.tolerance, "residual and likelihood tolerance");
}

RunConfig build_config(const CLI::App* sub, const Flags& f) {
  RunConfig cfg;
  bool system_given = sub->count("--n") || sub->count("--system");
  if (sub->count("--config")) {
    Json j;
    try {
      j = Json::parse(read_text_file(f.config));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("config: ") + e.what());
    }
    apply_config_json(j, cfg);
    system_given = system_given || j.contains("system");
  }
  if (sub->count("--n")) {
    require(f.n == 2 || f.n == 3, "--n must be 2 or 3");
    cfg.system = f.n == 2 ? "spin_half" : "spin_one";
  }
  if (sub->count("--system")) cfg.system = f.system;
  if (sub->count("--preset")) cfg.preset = f.preset;
  if (sub->count("--theta")) cfg.theta = Eigen::Map<const Vector>(f.theta.data(), static_cast<Eigen::Index>(f.theta.size()));
  if (sub->count("--kind")) cfg.bases.kind = f.kind;
  if (sub->count("--bases")) cfg.bases.kind = f.bases;
  if (sub->count("--alpha")) cfg.bases.alpha = f.alpha;
  if (sub->count("--basis-seed")) cfg.bases.seed = f.basis_seed;
  if (sub->count("--basis-file")) cfg.bases.file = f.basis_file;
  if (sub->count("--with-identity")) cfg.bases.include_identity = f.with_identity;
  // The appendix fixture only exists for N = 3.
  if (cfg.bases.kind == "appendix" && !system_given) cfg.system = "spin_one";
  if (sub->count("--m")) cfg.m = f.m;
  if (sub->count("--q")) cfg.q = f.q;
  if (sub->count("--seed")) {
    cfg.seed = f.seed;
    if (!sub->count("--basis-seed")) cfg.bases.seed = f.seed;
  }
  if (sub->count("--filter")) cfg.filter = parse_on_off(f.filter);
  if (sub->count("--out")) cfg.out = f.out;
  if (sub->count("--emit")) cfg.emit = parse_emit(f.emit);
  if (sub->count("--threads")) cfg.threads = f.threads;
  if (sub->count("--scaling")) cfg.scaling = parse_scaling(f.scaling);
  if (sub->count("--fisher")) cfg.fisher = parse_fisher(f.fisher);
  if (sub->count("--sample")) cfg.sample = f.sample;
  if (sub->count("--perfect")) cfg.perfect = f.perfect;
  if (sub->count("--tolerance")) {
    cfg.estimation.residual_tolerance = f.tolerance;
    cfg.estimation.likelihood_tolerance = f.tolerance;
  }
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qtomo: quantum state tomography by constrained maximum likelihood"};
  app.require_subcommand(1, 1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"bases", "write a measurement basis set and its MUB deviation"},
      {"simulate", "simulate measurement records"},
      {"estimate", "constrained ML estimate with asymptotic inference"},
      {"mc", "Monte Carlo tables, KDE grids and test size/power"},
      {"test", "Monte Carlo size/power of the configured hypotheses"}};
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfigError;
  }
  const CLI::App* sub = app.get_subcommands().front();
  try {
    Context ctx{build_config(sub, flags), out, err};
    validate_run_config(ctx.cfg);
    resolve_bases(ctx.cfg);
    const std::string name = sub->get_name();
    if (name == "bases") return cmd_bases(ctx);
    if (name == "simulate") return cmd_simulate(ctx);
    if (name == "estimate") return cmd_estimate(ctx);
    if (name == "mc") return cmd_mc(ctx, false);
    return cmd_mc(ctx, true);
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitConvergenceFailure;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace qtomo
