#pragma once

#include "specprec/metrics.hpp"
#include "specprec/precode.hpp"

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace specprec {

enum class Algorithm { None, Nsp, Pocs, Admm, Ssp, Oracle };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

/// Everything a reproducible experiment needs; serialized in full into the
/// output manifest.
struct Scenario {
  int schema_version = 1;
  std::string name = "custom";
  CarrierConfig carrier = CarrierConfig::centered(512, 36, 300, 15e3, 2);
  ConstellationSpec constellation{16};
  MaskDef mask = mask_preset("sem1");
  Algorithm algorithm = Algorithm::Ssp;

  // Algorithm knobs (ignored by algorithms that do not use them).
  int max_iter = 3000;
  double rho = 10.0;
  double tol_db = 0.01;
  int n_iter = 3;
  std::vector<int> ordering;  ///< optional constraint permutation; empty = file order

  int n_symbols = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "out";

  int calib_symbols = 10000;
  double signal_psd_ref_dbm = -21.5;
  double oracle_tol = 1e-9;

  void validate() const;  ///< throws ScenarioError naming the offending field
};

struct ScenarioError : std::runtime_error {
  enum class Kind { Parse, Validation };
  Kind kind;
  ScenarioError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// Parses and validates a config document (JSON with a schema_version key).
/// Unknown keys are rejected.
Scenario parse_scenario(const std::string& text);

/// Accepts a preset name or a config file path; config files may inherit from
/// a preset via the "preset" key.
Scenario load_scenario(const std::string& path_or_preset);

Scenario scenario_preset(const std::string& name);
std::vector<std::string> scenario_preset_names();

/// Runs the scenario and writes manifest.json, convergence.csv, psd.csv,
/// evm.csv and summary.json under output_dir. Returns the summary document.
nlohmann::json run_scenario(const Scenario& s);

struct BenchRow {
  std::string algorithm;
  int n_alloc = 0;
  int n_points = 0;
  double seconds_per_iter = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::map<std::string, double> loglog_slope;  ///< per algorithm, time vs n_alloc
  nlohmann::json to_json() const;
};

/// Median per-iteration wall clock over repetitions for each (n_alloc, M) size,
/// plus log-log slope estimates against n_alloc.
BenchReport benchmark(const Scenario& s, const std::vector<std::pair<int, int>>& sizes,
                      int repetitions = 5);

}  // namespace specprec
