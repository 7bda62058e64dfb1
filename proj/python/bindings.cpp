#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qtomo/bloch.hpp"
#include "qtomo/cli.hpp"
#include "qtomo/estimator.hpp"
#include "qtomo/harness.hpp"
#include "qtomo/inference.hpp"
#include "qtomo/kde.hpp"
#include "qtomo/measurement.hpp"
#include "qtomo/presets.hpp"
#include "qtomo/sampling.hpp"

namespace py = pybind11;
using namespace qtomo;

namespace {

using BasisPtr = std::shared_ptr<BasisSet>;

int dim_for_params(Eigen::Index p) {
  if (p == 3) return 2;
  if (p == 8) return 3;
  throw InvalidArgument("theta must have 3 (spin-1/2) or 8 (spin-1) entries");
}

BlochVector bloch(const Vector& theta) {
  dim_for_params(theta.size());
  return BlochVector(theta);
}

CMatrix to_density(const Vector& theta) {
  return bloch_to_density(bloch(theta), cached_generators(dim_for_params(theta.size()))).rho;
}

CovarianceScaling scaling_from(const std::string& s) {
  if (s == "per_observation") return CovarianceScaling::kPerObservation;
  if (s == "total_information") return CovarianceScaling::kTotalInformation;
  throw InvalidArgument("scaling must be per_observation or total_information");
}

FisherEstimate fisher_from(const Vector& theta, const Sample& sample, const std::string& kind) {
  if (kind == "hessian") return observed_fisher_hessian(bloch(theta), sample);
  if (kind == "opg") return observed_fisher_opg(bloch(theta), sample);
  throw InvalidArgument("kind must be hessian or opg");
}

py::dict test_report_dict(const TestReport& r) {
  py::dict d;
  d["statistic"] = r.statistic;
  d["kind"] = r.kind == TestKind::kT ? "t" : "wald";
  d["df"] = r.df;
  d["critical_value"] = r.critical_value;
  d["reject"] = r.reject;
  return d;
}

py::dict rejection_dict(const RejectionSummary& r) {
  py::dict d;
  d["count"] = r.count;
  d["rejection_rate"] = r.rejection_rate;
  d["critical_value"] = r.critical_value;
  d["finite_lower"] = r.finite_lower;
  d["finite_upper"] = r.finite_upper;
  return d;
}

py::dict summary_row_dict(const SummaryRow& r) {
  py::dict d;
  d["name"] = r.name;
  d["truth"] = r.truth;
  d["mean"] = r.mean;
  d["bias"] = r.bias;
  d["std"] = r.std;
  d["rmse"] = r.rmse;
  d["median"] = r.median;
  d["q025"] = r.q025;
  d["q975"] = r.q975;
  d["asymptotic_available"] = r.asymptotic_available;
  d["asymptotic_estimate"] = r.asymptotic_estimate;
  d["asymptotic_se"] = r.asymptotic_se;
  d["median_asymptotic_se"] = r.median_asymptotic_se;
  return d;
}

py::dict monte_carlo(const std::string& preset_name, BasisPtr bases, int m, int q, RngSeed seed, int threads,
                     bool filter, const std::string& scaling) {
  const auto preset = find_preset(preset_name);
  McConfig cfg;
  cfg.rho0 = preset.rho0;
  cfg.bases = bases ? std::shared_ptr<const BasisSet>(bases) : std::make_shared<const BasisSet>(mub_bases(preset.dim()));
  cfg.m = m;
  cfg.q = q;
  cfg.base_seed = seed;
  cfg.threads = threads;
  cfg.filter_unphysical = filter;
  cfg.covariance_scaling = scaling_from(scaling);

  std::vector<Replication> reps;
  {
    py::gil_scoped_release release;
    reps = run_monte_carlo(cfg);
  }
  py::dict out;
  out["total"] = static_cast<int>(reps.size());
  std::vector<Replication> used = reps;
  if (filter) {
    const auto f = filter_physical(reps);
    out["unphysical"] = f.unphysical;
    out["unconverged"] = f.unconverged;
    used = f.retained;
  }
  out["retained"] = static_cast<int>(used.size());

  Matrix estimates(static_cast<Eigen::Index>(used.size()), preset.theta().size());
  for (std::size_t j = 0; j < used.size(); ++j) estimates.row(static_cast<Eigen::Index>(j)) = used[j].result.theta_hat.theta.transpose();
  out["estimates"] = estimates;

  py::list rows;
  for (const auto& r : summarize(used, cfg.rho0).rows) rows.append(summary_row_dict(r));
  out["rows"] = rows;

  py::list tests;
  for (const auto& spec : preset.hypotheses) {
    const auto rep = test_size_power(used, spec);
    py::dict t;
    t["name"] = rep.name;
    t["kind"] = rep.kind == TestKind::kT ? "t" : "wald";
    t["df"] = rep.df;
    t["size"] = rejection_dict(rep.size);
    t["power"] = rejection_dict(rep.power);
    t["skipped"] = rep.skipped;
    tests.append(t);
  }
  out["tests"] = tests;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Constrained maximum-likelihood quantum state tomography for spin-1/2 and spin-1";

  py::register_exception<InvalidArgument>(mod, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(mod, "NumericalError", PyExc_RuntimeError);

  // Bloch parametrization.
  mod.def("generators", [](int dim) { return cached_generators(dim).lambdas; }, py::arg("dim"));
  mod.def("bloch_to_density", &to_density, py::arg("theta"));
  mod.def(
      "density_to_bloch",
      [](const CMatrix& rho) { return density_to_bloch(DensityMatrix(rho), cached_generators(static_cast<int>(rho.rows()))).theta; },
      py::arg("rho"));
  mod.def(
      "char_poly_coefficients",
      [](const Vector& theta) {
        return char_poly_coefficients(bloch(theta), cached_structure_constants(dim_for_params(theta.size()))).values;
      },
      py::arg("theta"));
  mod.def(
      "is_admissible",
      [](const Vector& theta) { return is_admissible(bloch(theta), cached_structure_constants(dim_for_params(theta.size()))); },
      py::arg("theta"));
  mod.def(
      "eigenvalues", [](const CMatrix& rho) { return hermitian_eigen(rho).eigenvalues; }, py::arg("rho"));
  mod.def(
      "fidelity", [](const CMatrix& a, const CMatrix& b) { return fidelity(DensityMatrix(a), DensityMatrix(b)); },
      py::arg("rho_hat"), py::arg("rho"));

  // Measurement bases.
  py::class_<BasisSet, BasisPtr>(mod, "BasisSet")
      .def(py::init([](const std::vector<CMatrix>& vectors, const std::string& kind) {
             std::vector<MeasurementBasis> bases;
             for (std::size_t r = 0; r < vectors.size(); ++r) bases.push_back({vectors[r], static_cast<int>(r)});
             return std::make_shared<BasisSet>(basis_kind_from_string(kind), std::move(bases));
           }),
           py::arg("vectors"), py::arg("kind") = "custom")
      .def_property_readonly("kind", [](const BasisSet& b) { return to_string(b.kind()); })
      .def_property_readonly("dim", &BasisSet::dim)
      .def("__len__", &BasisSet::size)
      .def("vectors", [](const BasisSet& b, int r) {
        if (r < 0 || r >= b.size()) throw py::index_error("basis index out of range");
        return b[r].vectors;
      });
  mod.def("mub_bases", [](int dim) { return std::make_shared<BasisSet>(mub_bases(dim)); }, py::arg("dim"));
  mod.def(
      "appendix_mbb", [](bool include_identity) { return std::make_shared<BasisSet>(appendix_mbb(include_identity)); },
      py::arg("include_identity") = false);
  mod.def(
      "generate_mbb",
      [](const BasisSet& mub, double alpha, double step, std::uint64_t seed, int max_sweeps) {
        MbbOptions o;
        o.alpha = alpha;
        o.step = step;
        o.seed = seed;
        o.max_sweeps = max_sweeps;
        return std::make_shared<BasisSet>(generate_mbb(mub, o));
      },
      py::arg("mub"), py::arg("alpha") = 1.2, py::arg("step") = 0.05, py::arg("seed") = 0, py::arg("max_sweeps") = 50);
  mod.def("verify_mub", &verify_mub, py::arg("bases"));
  mod.def(
      "born_probabilities", [](const CMatrix& rho, const BasisSet& b, int r) { return born_probabilities(DensityMatrix(rho), b[r]); },
      py::arg("rho"), py::arg("bases"), py::arg("basis"));

  // Samples.
  py::class_<Sample>(mod, "Sample")
      .def(py::init([](BasisPtr bases, const Matrix& counts) { return Sample(bases, counts); }), py::arg("bases"),
           py::arg("counts"))
      .def_static(
          "from_records",
          [](BasisPtr bases, const std::vector<std::pair<int, int>>& records) {
            std::vector<ObservationRecord> r;
            for (const auto& [basis, outcome] : records) r.push_back({basis, outcome});
            return Sample::from_records(bases, std::move(r));
          },
          py::arg("bases"), py::arg("records"))
      .def_property_readonly("counts", &Sample::counts)
      .def_property_readonly("total", &Sample::total)
      .def_property_readonly("bases", [](const Sample& s) { return std::const_pointer_cast<BasisSet>(s.bases_ptr()); })
      .def_property_readonly("records", [](const Sample& s) {
        std::vector<std::pair<int, int>> out;
        for (const auto& r : s.records()) out.emplace_back(r.basis, r.outcome);
        return out;
      });
  mod.def(
      "simulate_sample", [](const CMatrix& rho, BasisPtr bases, int m, RngSeed seed) {
        return simulate_sample(DensityMatrix(rho), bases, m, seed);
      },
      py::arg("rho"), py::arg("bases"), py::arg("m"), py::arg("seed"));
  mod.def(
      "expected_sample", [](const CMatrix& rho, BasisPtr bases, double m) { return expected_sample(DensityMatrix(rho), bases, m); },
      py::arg("rho"), py::arg("bases"), py::arg("m"));

  // Estimation.
  py::class_<EstimationConfig>(mod, "EstimationConfig")
      .def(py::init<>())
      .def_readwrite("residual_tolerance", &EstimationConfig::residual_tolerance)
      .def_readwrite("likelihood_tolerance", &EstimationConfig::likelihood_tolerance)
      .def_readwrite("max_newton_iters", &EstimationConfig::max_newton_iters)
      .def_readwrite("max_backtracks", &EstimationConfig::max_backtracks)
      .def_readwrite("bfgs_max_iters", &EstimationConfig::bfgs_max_iters)
      .def_readwrite("annealing_steps", &EstimationConfig::annealing_steps)
      .def_readwrite("annealing_initial_fraction", &EstimationConfig::annealing_initial_fraction)
      .def_readwrite("annealing_decay", &EstimationConfig::annealing_decay)
      .def_readwrite("multistart_count", &EstimationConfig::multistart_count)
      .def_readwrite("seed", &EstimationConfig::seed);

  py::class_<EstimationResult>(mod, "EstimationResult")
      .def_property_readonly("theta_hat", [](const EstimationResult& r) { return r.theta_hat.theta; })
      .def_property_readonly("rho_hat", [](const EstimationResult& r) { return r.rho_hat.rho; })
      .def_readonly("converged", &EstimationResult::converged)
      .def_readonly("physical", &EstimationResult::physical)
      .def_property_readonly("method", [](const EstimationResult& r) { return to_string(r.method); })
      .def_readonly("scaled_loglik", &EstimationResult::scaled_loglik)
      .def_readonly("residual_norm", &EstimationResult::residual_norm)
      .def_readonly("iterations", &EstimationResult::iterations)
      .def_readonly("singular_jacobian", &EstimationResult::singular_jacobian)
      .def_readonly("starts_tried", &EstimationResult::starts_tried)
      .def_readonly("diagnostics", &EstimationResult::diagnostics);

  mod.def(
      "estimate", [](const Sample& s, const EstimationConfig& cfg) { return estimate(s, cfg); }, py::arg("sample"),
      py::arg("config") = EstimationConfig{});
  mod.def(
      "tomographic_inversion",
      [](const Sample& s) {
        const auto r = tomographic_inversion(s);
        return py::make_tuple(r.theta.theta, r.admissible);
      },
      py::arg("sample"));
  mod.def(
      "log_likelihood", [](const Vector& theta, const Sample& s) { return log_likelihood(bloch(theta), s); }, py::arg("theta"),
      py::arg("sample"));
  mod.def(
      "score", [](const Vector& theta, const Sample& s) { return score(bloch(theta), s); }, py::arg("theta"), py::arg("sample"));

  // Inference.
  mod.def(
      "fisher_information",
      [](const Vector& theta, const Sample& s, const std::string& kind) { return fisher_from(theta, s, kind).matrix; },
      py::arg("theta"), py::arg("sample"), py::arg("kind") = "hessian");
  mod.def(
      "asymptotic_covariance",
      [](const Vector& theta, const Sample& s, const std::string& kind, const std::string& scaling) {
        return asymptotic_covariance(fisher_from(theta, s, kind), scaling_from(scaling)).sigma;
      },
      py::arg("theta"), py::arg("sample"), py::arg("kind") = "hessian", py::arg("scaling") = "per_observation");
  mod.def(
      "confidence_interval",
      [](double est, double se, double level) {
        const auto i = confidence_interval(est, se, level);
        return py::make_tuple(i.lower, i.upper);
      },
      py::arg("estimate"), py::arg("se"), py::arg("level") = 0.95);
  mod.def(
      "t_statistic", [](double v, double null, double se) { return test_report_dict(t_statistic(v, null, se)); },
      py::arg("value"), py::arg("null_value"), py::arg("se"));
  mod.def(
      "wald_statistic",
      [](const Vector& v, const Matrix& sigma) { return test_report_dict(wald_statistic(v, AsymptoticCovariance{sigma})); },
      py::arg("v"), py::arg("sigma"));
  mod.def("wald_critical_value", &wald_critical_value, py::arg("df"), py::arg("size") = 0.05);

  // Density estimation.
  mod.def(
      "kde",
      [](const std::vector<double>& x, int points, double padding) {
        const auto e = kde(x, points, padding);
        return py::make_tuple(e.grid, e.density, e.bandwidth);
      },
      py::arg("samples"), py::arg("points") = 512, py::arg("padding") = 4.0);
  mod.def("kde_bandwidth", &kde_bandwidth, py::arg("samples"));

  // Presets and Monte Carlo.
  mod.def("preset_names", &preset_names);
  mod.def(
      "preset",
      [](const std::string& name) {
        const auto p = find_preset(name);
        py::dict d;
        d["name"] = p.name;
        d["system"] = p.system;
        d["rho0"] = p.rho0.rho;
        d["theta"] = p.theta().theta;
        return d;
      },
      py::arg("name"));
  mod.def("monte_carlo", &monte_carlo, py::arg("preset"), py::arg("bases") = BasisPtr{}, py::arg("m") = 100,
          py::arg("q") = 1000, py::arg("seed") = 1, py::arg("threads") = 0, py::arg("filter") = true,
          py::arg("scaling") = "total_information");

  mod.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
