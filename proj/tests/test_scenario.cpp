#include "specprec/scenario.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace specprec;

namespace {
// Small fast variant of a preset for end-to-end runs.
Scenario tiny(const std::string& preset, Algorithm algo, const std::string& out) {
  Scenario s = scenario_preset(preset);
  s.algorithm = algo;
  s.n_symbols = 4;
  s.calib_symbols = 100;
  s.output_dir = out;
  return s;
}

nlohmann::json strip_timing(nlohmann::json j) {
  j.erase("timing");
  return j;
}
}  // namespace

TEST_CASE("parse: minimal document and defaults") {
  auto s = parse_scenario(R"({"schema_version": 1})");
  CHECK(s.carrier.fft_size == 512);
  CHECK(s.carrier.n_alloc() == 300);
  CHECK(s.constellation.order == 16);
  CHECK(s.rho == 10.0);
  CHECK(s.threads == 1);
  CHECK(s.algorithm == Algorithm::Ssp);
}

TEST_CASE("parse: missing schema_version and unknown keys are rejected") {
  CHECK_THROWS_AS(parse_scenario(R"({})"), ScenarioError);
  try {
    parse_scenario(R"({"schema_version": 1, "max_itern": 5})");
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(e.kind == ScenarioError::Kind::Parse);
    CHECK(std::string(e.what()).find("max_itern") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario("not json at all"), ScenarioError);
}

TEST_CASE("parse: validation failures name the offending field") {
  try {
    parse_scenario(R"({"schema_version": 1, "rho": -1.0})");
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(e.kind == ScenarioError::Kind::Validation);
    CHECK(std::string(e.what()).find("rho") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario(R"({"schema_version": 1, "n_symbols": 0})"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"schema_version": 1, "constellation": {"order": 5}})"),
                  ScenarioError);
}

TEST_CASE("presets: canonical scenario contents") {
  auto names = scenario_preset_names();
  CHECK(names.size() == 4);
  auto s = scenario_preset("sem1_16qam");
  CHECK(s.carrier.fft_size == 512);
  CHECK(s.carrier.cp_len == 36);
  CHECK(s.carrier.n_alloc() == 300);  // 25 PRB
  CHECK(s.carrier.subcarrier_spacing_hz == 15e3);
  CHECK(s.carrier.oversampling == 2);
  CHECK(s.constellation.order == 16);
  CHECK(s.rho == 10.0);
  REQUIRE(s.mask.freq_khz.size() == 8);
  CHECK(s.mask.freq_khz[0] == -5010.0);
  CHECK(s.mask.level_dbm_per_100khz[0] == -75.0);
  auto s2 = scenario_preset("sem2_64qam");
  CHECK(s2.constellation.order == 64);
  CHECK(s2.mask.level_dbm_per_100khz[0] == -85.0);
  CHECK_THROWS_AS(scenario_preset("sem9_16qam"), ScenarioError);
}

TEST_CASE("config files can inherit from a preset") {
  const std::string path = "inherit_probe.json";
  {
    std::ofstream out(path);
    out << R"({"schema_version": 1, "preset": "sem2_16qam", "n_symbols": 7, "seed": 99})";
  }
  auto s = load_scenario(path);
  CHECK(s.n_symbols == 7);
  CHECK(s.seed == 99);
  CHECK(s.mask.level_dbm_per_100khz[0] == -85.0);
  // load_scenario also accepts bare preset names
  CHECK(load_scenario("sem1_16qam").constellation.order == 16);
  CHECK_THROWS_AS(load_scenario("no_such_file.json"), ScenarioError);
}

TEST_CASE("run: output files, manifest completeness, pass-through algorithm") {
  auto s = tiny("sem1_16qam", Algorithm::None, "out_none");
  auto summary = run_scenario(s);
  CHECK(summary["evm_overall_pct"].get<double>() == 0.0);
  for (auto f : {"manifest.json", "summary.json", "convergence.csv", "psd.csv", "evm.csv"})
    CHECK(std::filesystem::exists(std::filesystem::path("out_none") / f));
  std::ifstream mf("out_none/manifest.json");
  auto manifest = nlohmann::json::parse(mf);
  auto& sc = manifest["scenario"];
  for (auto key : {"schema_version", "carrier", "constellation", "mask", "algorithm", "max_iter",
                   "rho", "tol_db", "n_iter", "n_symbols", "seed", "threads", "calib_symbols",
                   "signal_psd_ref_dbm"})
    CHECK(sc.contains(key));
  CHECK(manifest.contains("calibration"));
  CHECK(manifest.contains("gamma_linear"));
}

TEST_CASE("run: NSP drives margins deep below the mask") {
  auto summary = run_scenario(tiny("sem1_16qam", Algorithm::Nsp, "out_nsp"));
  CHECK(summary["max_sem_margin_db"].get<double>() < -80.0);
  CHECK(summary["evm_overall_pct"].get<double>() > 0.0);
}

TEST_CASE("run: determinism across thread counts (timing excluded)") {
  auto s = tiny("sem2_16qam", Algorithm::Ssp, "out_t1");
  s.n_symbols = 6;
  auto a = run_scenario(s);
  s.threads = 4;
  s.output_dir = "out_t4";
  auto b = run_scenario(s);
  CHECK(strip_timing(a).dump() == strip_timing(b).dump());
  // and csv outputs match byte-for-byte
  for (auto f : {"convergence.csv", "psd.csv", "evm.csv"}) {
    std::ifstream fa(std::string("out_t1/") + f), fb(std::string("out_t4/") + f);
    std::string sa((std::istreambuf_iterator<char>(fa)), {});
    std::string sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(sa == sb);
  }
}

TEST_CASE("run: changing the seed changes the results") {
  auto s = tiny("sem1_16qam", Algorithm::Ssp, "out_s1");
  auto a = run_scenario(s);
  s.seed = 2;
  s.output_dir = "out_s2";
  auto b = run_scenario(s);
  CHECK(strip_timing(a).dump() != strip_timing(b).dump());
}

TEST_CASE("bench: M = 0 costs nearly nothing and the report is well-formed") {
  Scenario s = scenario_preset("sem1_16qam");
  auto report = benchmark(s, {{64, 0}, {128, 0}}, 3);
  REQUIRE(!report.rows.empty());
  for (auto& r : report.rows) {
    CHECK(r.n_points == 0);
    CHECK(r.seconds_per_iter >= 0.0);
    CHECK(r.seconds_per_iter < 1e-3);
  }
  auto j = report.to_json();
  CHECK(j.contains("rows"));
  CHECK(j.contains("loglog_slope"));
}

TEST_CASE("cli: exit codes 2 (validation) and 3 (runtime)") {
  const std::string cli = SPECPREC_CLI_PATH;
  int rc = std::system((cli + " run nonexistent_config.json > /dev/null 2>&1").c_str());
  REQUIRE(WIFEXITED(rc));
  CHECK(WEXITSTATUS(rc) == 2);

  // unwritable output directory -> runtime error
  std::ofstream("runtime_probe.json")
      << R"({"schema_version": 1, "preset": "sem1_16qam", "n_symbols": 1, "calib_symbols": 20})";
  rc = std::system(
      (cli + " run runtime_probe.json --out /proc/no_way > /dev/null 2>&1").c_str());
  REQUIRE(WIFEXITED(rc));
  CHECK(WEXITSTATUS(rc) == 3);

  rc = std::system((cli + " presets list > /dev/null 2>&1").c_str());
  REQUIRE(WIFEXITED(rc));
  CHECK(WEXITSTATUS(rc) == 0);
}
