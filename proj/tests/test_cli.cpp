#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "qtomo/cli.hpp"
#include "qtomo/serialization.hpp"

using namespace qtomo;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qtomo_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

Json load_json(const fs::path& p) { return Json::parse(read_text_file(p.string())); }

}  // namespace

TEST_CASE("bases subcommand") {
  const auto dir = scratch("bases");
  const auto r = run({"bases", "--n", "3", "--kind", "mub", "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  const auto set = basis_set_from_json(load_json(dir / "bases.json"));
  CHECK(set.size() == 4);
  CHECK(verify_mub(set) <= 1e-12);
  CHECK(load_json(dir / "manifest.json")["mub_deviation"].get<double>() <= 1e-12);

  const auto d1 = scratch("mbb1");
  const auto d2 = scratch("mbb2");
  REQUIRE(run({"bases", "--n", "3", "--kind", "mbb", "--alpha", "1.2", "--seed", "7", "--out", d1.string()}).code == 0);
  REQUIRE(run({"bases", "--n", "3", "--kind", "mbb", "--alpha", "1.2", "--seed", "7", "--out", d2.string()}).code == 0);
  CHECK(read_text_file((d1 / "bases.json").string()) == read_text_file((d2 / "bases.json").string()));

  const auto da = scratch("appendix");
  REQUIRE(run({"bases", "--kind", "appendix", "--out", da.string()}).code == 0);
  const auto app = basis_set_from_json(load_json(da / "bases.json"));
  const auto fixture = appendix_mbb();
  REQUIRE(app.size() == fixture.size());
  for (int b = 0; b < app.size(); ++b) CHECK((app[b].vectors - fixture[b].vectors).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(verify_mub(app) >= 0.2 / std::sqrt(3.0));
}

TEST_CASE("simulate subcommand") {
  const auto d1 = scratch("sim1");
  const auto d2 = scratch("sim2");
  const std::vector<std::string> base = {"simulate", "--system", "spin_half", "--m", "100", "--seed", "4"};
  auto a1 = base;
  a1.insert(a1.end(), {"--out", d1.string()});
  auto a2 = base;
  a2.insert(a2.end(), {"--out", d2.string()});
  REQUIRE(run(a1).code == kExitOk);
  REQUIRE(run(a2).code == kExitOk);
  const std::string csv = read_text_file((d1 / "sample_m100.csv").string());
  CHECK(csv == read_text_file((d2 / "sample_m100.csv").string()));
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "basis,outcome");
  int per_basis[3] = {0, 0, 0};
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++rows;
    ++per_basis[std::stoi(line.substr(0, line.find(',')))];
  }
  CHECK(rows == 100);
  CHECK(per_basis[0] == 34);
  CHECK(per_basis[1] == 33);
  CHECK(per_basis[2] == 33);
  const auto j = load_json(d1 / "sample_m100.json");
  CHECK(j["seed"].get<std::uint64_t>() == 4);
}

TEST_CASE("estimate subcommand") {
  const auto d = scratch("est");
  const auto r = run({"estimate", "--system", "spin_one", "--perfect", "--m", "1000", "--out", d.string()});
  REQUIRE(r.code == kExitOk);
  const auto j = load_json(d / "result.json");
  const Vector truth{{0.15, -0.14, -0.07, -0.04, -0.15, -0.01, -0.17, -0.23}};
  for (int k = 0; k < 8; ++k) CHECK(std::abs(j["theta_hat"][k].get<double>() - truth[k]) <= 1e-6);
  CHECK(j["converged"].get<bool>());
  CHECK(j["inference"]["se"].size() == 8);

  const auto big = scratch("est_big");
  REQUIRE(run({"estimate", "--system", "spin_half", "--m", "10000", "--seed", "3", "--out", big.string()}).code == 0);
  CHECK(load_json(big / "result.json")["fidelity"].get<double>() >= 0.999);

  // Round trip: simulate to disk, estimate from the file.
  const auto s = scratch("est_file");
  REQUIRE(run({"simulate", "--system", "spin_half", "--m", "500", "--seed", "2", "--out", s.string()}).code == 0);
  const auto f = run({"estimate", "--system", "spin_half", "--sample", (s / "sample_m500.json").string(), "--out",
                      (s / "est").string()});
  CHECK(f.code == kExitOk);
  CHECK(load_json(s / "est" / "result.json")["m"].get<double>() == 500.0);
}

TEST_CASE("exit codes") {
  CHECK(run({"mc", "--system", "spin_two"}).code == kExitConfigError);
  CHECK(run({"mc", "--q", "0"}).code == kExitConfigError);
  CHECK(run({"estimate", "--theta", "0.1,0.2"}).code == kExitConfigError);
  CHECK(run({"bases", "--kind", "mbb", "--alpha", "0.5"}).code == kExitConfigError);
  CHECK(run({"nonsense"}).code == kExitConfigError);
  const auto d = scratch("io");
  CHECK(run({"estimate", "--sample", (d / "missing.csv").string(), "--out", d.string()}).code == kExitIoError);
  CHECK(run({"mc", "--config", (d / "missing.json").string()}).code == kExitIoError);
}

TEST_CASE("mc subcommand with filtering off") {
  const auto d = scratch("mc");
  const auto r = run({"mc", "--system", "spin_half", "--m", "100,400", "--q", "60", "--filter", "off", "--emit",
                      "tables,kde,svg,raw", "--out", d.string()});
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"summary.csv", "summary_unfiltered.csv", "size_power.csv", "manifest.json",
                        "kde_m100_theta1.csv", "kde_unfiltered_m400_theta3.csv", "kde_m100_theta2.svg",
                        "replications_m400.csv"})
    CHECK_MESSAGE(fs::exists(d / f), f);
  const auto manifest = load_json(d / "manifest.json");
  CHECK(manifest["runs"].size() == 2);
  CHECK(manifest["runs"][0]["first_seed"].get<std::uint64_t>() == 1);
  CHECK(manifest["runs"][0]["last_seed"].get<std::uint64_t>() == 60);
  const std::string summary = read_text_file((d / "summary.csv").string());
  CHECK(summary.find("theta1") != std::string::npos);
  CHECK(summary.find("\nB,400,") != std::string::npos);
}

TEST_CASE("config file round trip") {
  const auto d = scratch("config");
  fs::create_directories(d);
  RunConfig cfg;
  cfg.system = "spin_half";
  cfg.m = {200};
  cfg.q = 20;
  cfg.out = (d / "out").string();
  write_text_file((d / "run.json").string(), run_config_to_json(cfg).dump(2));
  const auto r = run({"test", "--config", (d / "run.json").string()});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(d / "out" / "size_power.csv"));
  write_text_file((d / "bad.json").string(), "{\"bogus_key\": 1}");
  CHECK(run({"test", "--config", (d / "bad.json").string()}).code == kExitConfigError);
}
