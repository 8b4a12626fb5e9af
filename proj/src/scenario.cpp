#include "specprec/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace specprec {

namespace fs = std::filesystem;
using nlohmann::json;

static constexpr const char* kVersion = "0.1.0";

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::None: return "none";
    case Algorithm::Nsp: return "nsp";
    case Algorithm::Pocs: return "pocs";
    case Algorithm::Admm: return "admm";
    case Algorithm::Ssp: return "ssp";
    case Algorithm::Oracle: return "oracle";
  }
  return "none";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "none") return Algorithm::None;
  if (name == "nsp") return Algorithm::Nsp;
  if (name == "pocs") return Algorithm::Pocs;
  if (name == "admm") return Algorithm::Admm;
  if (name == "ssp") return Algorithm::Ssp;
  if (name == "oracle") return Algorithm::Oracle;
  throw ScenarioError(ScenarioError::Kind::Validation, "algorithm: unknown value '" + name + "'");
}

void Scenario::validate() const {
  auto fail = [](const std::string& msg) {
    throw ScenarioError(ScenarioError::Kind::Validation, msg);
  };
  if (schema_version != 1) fail("schema_version: unsupported value");
  try {
    carrier.validate();
    constellation.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("carrier/constellation: ") + e.what());
  }
  if (mask.freq_khz.size() != mask.level_dbm_per_100khz.size())
    fail("mask: freq_khz and level_dbm_per_100khz lengths differ");
  if (algorithm != Algorithm::None && algorithm != Algorithm::Nsp && mask.freq_khz.empty())
    fail("mask: no points defined");
  if (max_iter < 1) fail("max_iter: must be >= 1");
  if (!(rho > 0.0)) fail("rho: must be positive");
  if (n_iter < 1) fail("n_iter: must be >= 1");
  if (!ordering.empty()) {
    if (ordering.size() != mask.freq_khz.size()) fail("ordering: length must equal mask size");
    std::vector<bool> seen(ordering.size(), false);
    for (int idx : ordering) {
      if (idx < 0 || idx >= static_cast<int>(ordering.size()) || seen[static_cast<size_t>(idx)])
        fail("ordering: must be a permutation of 0..M-1");
      seen[static_cast<size_t>(idx)] = true;
    }
  }
  if (n_symbols < 1) fail("n_symbols: must be >= 1");
  if (threads < 1) fail("threads: must be >= 1");
  if (calib_symbols < 1) fail("calib_symbols: must be >= 1");
  if (!(oracle_tol > 0.0)) fail("oracle_tol: must be positive");
}

namespace {

json scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["carrier"] = {{"fft_size", s.carrier.fft_size},
                  {"cp_len", s.carrier.cp_len},
                  {"allocated", s.carrier.allocated},
                  {"subcarrier_spacing_hz", s.carrier.subcarrier_spacing_hz},
                  {"oversampling", s.carrier.oversampling}};
  j["constellation"] = {{"order", s.constellation.order}};
  j["mask"] = {{"label", s.mask.label},
               {"freq_khz", s.mask.freq_khz},
               {"level_dbm_per_100khz", s.mask.level_dbm_per_100khz}};
  j["algorithm"] = algorithm_name(s.algorithm);
  j["max_iter"] = s.max_iter;
  j["rho"] = s.rho;
  j["tol_db"] = s.tol_db;
  j["n_iter"] = s.n_iter;
  j["ordering"] = s.ordering;
  j["n_symbols"] = s.n_symbols;
  j["seed"] = s.seed;
  j["threads"] = s.threads;
  j["output_dir"] = s.output_dir;
  j["calib_symbols"] = s.calib_symbols;
  j["signal_psd_ref_dbm"] = s.signal_psd_ref_dbm;
  j["oracle_tol"] = s.oracle_tol;
  return j;
}

void apply_json(Scenario& s, const json& j) {
  static const std::vector<std::string> known = {
      "schema_version", "name",      "preset",     "carrier",    "constellation",
      "mask",           "algorithm", "max_iter",   "rho",        "tol_db",
      "n_iter",         "ordering",  "n_symbols",  "seed",       "threads",
      "output_dir",     "calib_symbols", "signal_psd_ref_dbm", "oracle_tol"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ScenarioError(ScenarioError::Kind::Parse, "unknown key '" + it.key() + "'");

  try {
    if (j.contains("schema_version")) s.schema_version = j["schema_version"].get<int>();
    if (j.contains("name")) s.name = j["name"].get<std::string>();
    if (j.contains("carrier")) {
      const json& c = j["carrier"];
      static const std::vector<std::string> ck = {"fft_size", "cp_len", "n_alloc", "allocated",
                                                  "subcarrier_spacing_hz", "oversampling"};
      for (auto it = c.begin(); it != c.end(); ++it)
        if (std::find(ck.begin(), ck.end(), it.key()) == ck.end())
          throw ScenarioError(ScenarioError::Kind::Parse, "carrier: unknown key '" + it.key() + "'");
      if (c.contains("fft_size")) s.carrier.fft_size = c["fft_size"].get<int>();
      if (c.contains("cp_len")) s.carrier.cp_len = c["cp_len"].get<int>();
      if (c.contains("subcarrier_spacing_hz"))
        s.carrier.subcarrier_spacing_hz = c["subcarrier_spacing_hz"].get<double>();
      if (c.contains("oversampling")) s.carrier.oversampling = c["oversampling"].get<int>();
      if (c.contains("allocated") && c.contains("n_alloc"))
        throw ScenarioError(ScenarioError::Kind::Parse,
                            "carrier: give either 'allocated' or 'n_alloc', not both");
      if (c.contains("allocated")) {
        s.carrier.allocated = c["allocated"].get<std::vector<int>>();
      } else if (c.contains("n_alloc")) {
        s.carrier = CarrierConfig::centered(s.carrier.fft_size, s.carrier.cp_len,
                                            c["n_alloc"].get<int>(),
                                            s.carrier.subcarrier_spacing_hz,
                                            s.carrier.oversampling);
      }
    }
    if (j.contains("constellation")) s.constellation.order = j["constellation"]["order"].get<int>();
    if (j.contains("mask")) {
      const json& m = j["mask"];
      if (m.is_string()) {
        s.mask = mask_preset(m.get<std::string>());
      } else if (m.contains("file")) {
        s.mask = load_mask_file(m["file"].get<std::string>());
      } else {
        s.mask.freq_khz = m["freq_khz"].get<std::vector<double>>();
        s.mask.level_dbm_per_100khz = m["level_dbm_per_100khz"].get<std::vector<double>>();
        s.mask.label = m.value("label", std::string("inline"));
      }
    }
    if (j.contains("algorithm")) s.algorithm = algorithm_from_name(j["algorithm"].get<std::string>());
    if (j.contains("max_iter")) s.max_iter = j["max_iter"].get<int>();
    if (j.contains("rho")) s.rho = j["rho"].get<double>();
    if (j.contains("tol_db")) s.tol_db = j["tol_db"].get<double>();
    if (j.contains("n_iter")) s.n_iter = j["n_iter"].get<int>();
    if (j.contains("ordering")) s.ordering = j["ordering"].get<std::vector<int>>();
    if (j.contains("n_symbols")) s.n_symbols = j["n_symbols"].get<int>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) s.threads = j["threads"].get<int>();
    if (j.contains("output_dir")) s.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("calib_symbols")) s.calib_symbols = j["calib_symbols"].get<int>();
    if (j.contains("signal_psd_ref_dbm"))
      s.signal_psd_ref_dbm = j["signal_psd_ref_dbm"].get<double>();
    if (j.contains("oracle_tol")) s.oracle_tol = j["oracle_tol"].get<double>();
  } catch (const ScenarioError&) {
    throw;
  } catch (const json::exception& e) {
    throw ScenarioError(ScenarioError::Kind::Parse, std::string("config: ") + e.what());
  }
}

}  // namespace

Scenario scenario_preset(const std::string& name) {
  Scenario s;
  s.name = name;
  auto set = [&](const std::string& mask, int order) {
    s.mask = mask_preset(mask);
    s.constellation.order = order;
  };
  if (name == "sem1_16qam") set("sem1", 16);
  else if (name == "sem2_16qam") set("sem2", 16);
  else if (name == "sem1_64qam") set("sem1", 64);
  else if (name == "sem2_64qam") set("sem2", 64);
  else
    throw ScenarioError(ScenarioError::Kind::Validation, "unknown preset '" + name + "'");
  s.validate();
  return s;
}

std::vector<std::string> scenario_preset_names() {
  return {"sem1_16qam", "sem2_16qam", "sem1_64qam", "sem2_64qam"};
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(ScenarioError::Kind::Parse, std::string("config parse: ") + e.what());
  }
  if (!j.contains("schema_version"))
    throw ScenarioError(ScenarioError::Kind::Parse, "config: missing schema_version");
  Scenario s;
  if (j.contains("preset")) s = scenario_preset(j["preset"].get<std::string>());
  apply_json(s, j);
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path_or_preset) {
  auto presets = scenario_preset_names();
  if (std::find(presets.begin(), presets.end(), path_or_preset) != presets.end())
    return scenario_preset(path_or_preset);
  std::ifstream in(path_or_preset);
  if (!in)
    throw ScenarioError(ScenarioError::Kind::Validation,
                        "no such preset or config file: " + path_or_preset);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

namespace {

struct SymbolOutcome {
  OfdmSymbol d;
  PrecoderResult result;
};

PrecoderResult run_algorithm(const Scenario& s, const LeakageMatrix& A,
                             const std::vector<Rank1Constraint>& constraints,
                             const OfdmSymbol& d) {
  switch (s.algorithm) {
    case Algorithm::None: {
      PrecoderResult r;
      r.d_bar = d;
      r.max_violation_db = max_violation_db(constraints, d);
      return r;
    }
    case Algorithm::Nsp: return nsp_precode(A, d);
    case Algorithm::Pocs: return pocs_precode(constraints, d, s.max_iter, s.tol_db);
    case Algorithm::Admm: return admm_precode(constraints, d, s.rho, s.max_iter, s.tol_db);
    case Algorithm::Ssp: return ssp_precode(constraints, d, s.n_iter);
    case Algorithm::Oracle: return dykstra_oracle(constraints, d, s.max_iter, s.oracle_tol);
  }
  throw std::logic_error("unreachable");
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

json run_scenario(const Scenario& s) {
  s.validate();
  const auto t0 = std::chrono::steady_clock::now();

  fs::create_directories(s.output_dir);

  Calibration cal = measure_calibration(s.carrier, s.constellation, s.calib_symbols,
                                        mix_seed(s.seed, 0x5eedc001), s.signal_psd_ref_dbm);

  // Mask points in subcarrier units; thresholds via the measured calibration.
  std::vector<FrequencyPoint> points;
  RVec mask_dbm(static_cast<int>(s.mask.freq_khz.size()));
  for (size_t i = 0; i < s.mask.freq_khz.size(); ++i) {
    points.push_back({s.mask.freq_khz[i] * 1e3 / s.carrier.subcarrier_spacing_hz});
    mask_dbm[static_cast<int>(i)] = s.mask.level_dbm_per_100khz[i];
  }
  MaskSpec mask;
  LeakageMatrix A;
  std::vector<Rank1Constraint> constraints;
  if (!points.empty()) {
    RVec cal_vec = RVec::Constant(mask_dbm.size(), cal.gamma_cal);
    mask.points = points;
    mask.gamma = mask_to_gamma(mask_dbm, s.signal_psd_ref_dbm, cal_vec);
    mask.label = s.mask.label;
    A = build_leakage_matrix(s.carrier, points);
    constraints = constraints_from(A, mask.gamma);
    if (!s.ordering.empty()) {
      std::vector<Rank1Constraint> permuted;
      permuted.reserve(constraints.size());
      for (int idx : s.ordering) permuted.push_back(constraints[static_cast<size_t>(idx)]);
      constraints = std::move(permuted);
    }
  }

  // Precode the batch; workers pick symbols by index, results are reduced in
  // symbol order so the thread count never changes outputs.
  std::vector<SymbolOutcome> outcomes(static_cast<size_t>(s.n_symbols));
  {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= s.n_symbols) break;
        OfdmSymbol d =
            gen_ofdm_symbol(s.carrier, s.constellation, mix_seed(s.seed, static_cast<std::uint64_t>(i)));
        outcomes[static_cast<size_t>(i)] = {d, run_algorithm(s, A, constraints, d)};
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < s.threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  // Batch metrics, reduced in symbol-index order.
  std::vector<CVec> waveforms, precoded;
  double err_acc = 0.0, ref_acc = 0.0;
  std::vector<double> iterations;
  int converged_count = 0;
  const int prb_size = 12;
  const int n_prb = (s.carrier.n_alloc() + prb_size - 1) / prb_size;
  RVec prb_err = RVec::Zero(n_prb), prb_ref = RVec::Zero(n_prb);
  for (const auto& o : outcomes) {
    waveforms.push_back(ofdm_modulate(s.carrier, o.result.d_bar));
    precoded.push_back(o.result.d_bar);
    err_acc += (o.d - o.result.d_bar).squaredNorm();
    ref_acc += o.d.squaredNorm();
    iterations.push_back(static_cast<double>(o.result.iterations));
    if (o.result.converged) ++converged_count;
    for (int p = 0; p < n_prb; ++p) {
      int lo = p * prb_size;
      int len = std::min(prb_size, s.carrier.n_alloc() - lo);
      prb_ref[p] += o.d.segment(lo, len).squaredNorm();
      prb_err[p] += (o.d.segment(lo, len) - o.result.d_bar.segment(lo, len)).squaredNorm();
    }
  }

  PsdEstimate psd = psd_periodogram(waveforms, s.carrier, 100e3, cal.psd_offset_db);
  double aclr = aclr_first_adjacent(psd, s.carrier);
  RVec margins;
  if (!points.empty()) margins = sem_margin(A, mask, precoded);

  // convergence.csv: per-iteration aggregate over the batch
  {
    std::ostringstream csv;
    csv << "iteration,objective,violation_db,aclr_db\n";
    size_t longest = 0;
    for (const auto& o : outcomes) longest = std::max(longest, o.result.trace.entries.size());
    for (size_t i = 0; i < longest; ++i) {
      double obj = 0.0, viol = kDbFloor;
      int count = 0;
      int iter = 0;
      for (const auto& o : outcomes) {
        const auto& e = o.result.trace.entries;
        if (i < e.size()) {
          obj += e[i].objective;
          viol = std::max(viol, e[i].max_violation_db);
          iter = e[i].iteration;
          ++count;
        }
      }
      csv << iter << "," << obj / std::max(count, 1) << "," << viol << ",";
      if (i + 1 == longest) csv << aclr;
      csv << "\n";
    }
    write_text(fs::path(s.output_dir) / "convergence.csv", csv.str());
  }

  // psd.csv
  {
    std::ostringstream csv;
    csv << "freq_hz,psd_dbm_per_100khz\n";
    for (int k = 0; k < psd.freqs_hz.size(); ++k)
      csv << psd.freqs_hz[k] << "," << psd.psd_dbm_per_100khz[k] << "\n";
    write_text(fs::path(s.output_dir) / "psd.csv", csv.str());
  }

  // evm.csv
  {
    std::ostringstream csv;
    csv << "prb_index,evm_pct\n";
    for (int p = 0; p < n_prb; ++p) {
      double e = prb_ref[p] > 0.0 ? std::sqrt(prb_err[p] / prb_ref[p]) * 100.0 : 0.0;
      csv << p << "," << e << "\n";
    }
    write_text(fs::path(s.output_dir) / "evm.csv", csv.str());
  }

  const auto t1 = std::chrono::steady_clock::now();
  const double wall_s = std::chrono::duration<double>(t1 - t0).count();
  double total_iters = std::accumulate(iterations.begin(), iterations.end(), 0.0);

  json cal_json = {{"gamma_cal", cal.gamma_cal},
                   {"psd_offset_db", cal.psd_offset_db},
                   {"signal_psd_ref_dbm", cal.signal_psd_ref_dbm},
                   {"n_symbols", cal.n_symbols}};

  json manifest = {{"version", kVersion},
                   {"scenario", scenario_to_json(s)},
                   {"calibration", cal_json}};
  if (!points.empty()) {
    std::vector<double> g(mask.gamma.data(), mask.gamma.data() + mask.gamma.size());
    manifest["gamma_linear"] = g;
  }
  write_text(fs::path(s.output_dir) / "manifest.json", manifest.dump(2) + "\n");

  json summary = {{"version", kVersion},
                  {"name", s.name},
                  {"algorithm", algorithm_name(s.algorithm)},
                  {"seed", s.seed},
                  {"n_symbols", s.n_symbols},
                  {"evm_overall_pct", ref_acc > 0.0 ? std::sqrt(err_acc / ref_acc) * 100.0 : 0.0},
                  {"aclr_db", aclr},
                  {"max_sem_margin_db", margins.size() ? margins.maxCoeff() : kDbFloor},
                  {"iterations_median", median_of(iterations)},
                  {"converged_fraction",
                   static_cast<double>(converged_count) / static_cast<double>(s.n_symbols)},
                  {"calibration", cal_json},
                  {"timing",
                   {{"wall_s", wall_s},
                    {"wall_per_iteration_s",
                     total_iters > 0 ? wall_s / total_iters : 0.0}}}};
  write_text(fs::path(s.output_dir) / "summary.json", summary.dump(2) + "\n");
  return summary;
}

BenchReport benchmark(const Scenario& s, const std::vector<std::pair<int, int>>& sizes,
                      int repetitions) {
  using clock = std::chrono::steady_clock;
  BenchReport report;
  std::map<std::string, std::vector<std::pair<double, double>>> points;  // (log n, log t)

  for (auto [n_alloc, M] : sizes) {
    int fft = 1;
    while (fft < 2 * n_alloc) fft *= 2;
    int cp = std::max(1, fft * 36 / 512);
    CarrierConfig cfg = CarrierConfig::centered(fft, cp, n_alloc, s.carrier.subcarrier_spacing_hz, 1);
    std::vector<FrequencyPoint> pts;
    for (int m = 0; m < M; ++m) {
      double off = n_alloc / 2.0 + 12.5 + 3.0 * m;
      pts.push_back({m % 2 == 0 ? off : -off});
    }
    OfdmSymbol d = gen_ofdm_symbol(cfg, s.constellation, mix_seed(s.seed, 0xb13c));
    std::vector<Rank1Constraint> constraints;
    if (M > 0) {
      LeakageMatrix A = build_leakage_matrix(cfg, pts);
      RVec gamma(M);
      for (int m = 0; m < M; ++m) gamma[m] = 1e-4 * A.rows.row(m).squaredNorm();
      constraints = constraints_from(A, gamma);
    }

    auto time_median = [&](auto&& body, int iters_per_call) {
      std::vector<double> t;
      for (int r = 0; r < repetitions; ++r) {
        auto a = clock::now();
        body();
        auto b = clock::now();
        t.push_back(std::chrono::duration<double>(b - a).count() / iters_per_call);
      }
      return median_of(t);
    };

    const int kFirstOrderIters = 40;
    double t_pocs = time_median(
        [&] { pocs_precode(constraints, d, kFirstOrderIters, 2.0 * kDbFloor); }, kFirstOrderIters);
    double t_admm = time_median(
        [&] { admm_precode(constraints, d, s.rho, kFirstOrderIters, 2.0 * kDbFloor); },
        kFirstOrderIters);
    const int kSweeps = 2;
    double t_ssp =
        M > 0 ? time_median([&] { ssp_precode(constraints, d, kSweeps); }, kSweeps) : 0.0;

    report.rows.push_back({"pocs", n_alloc, M, t_pocs});
    report.rows.push_back({"admm", n_alloc, M, t_admm});
    report.rows.push_back({"ssp", n_alloc, M, t_ssp});
    for (const auto& [name, t] :
         std::initializer_list<std::pair<std::string, double>>{{"pocs", t_pocs},
                                                               {"admm", t_admm},
                                                               {"ssp", t_ssp}})
      if (t > 0.0) points[name].emplace_back(std::log(static_cast<double>(n_alloc)), std::log(t));
  }

  for (const auto& [name, pts] : points) {
    if (pts.size() < 2) continue;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double n = static_cast<double>(pts.size());
    report.loglog_slope[name] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return report;
}

json BenchReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"algorithm", r.algorithm},
                         {"n_alloc", r.n_alloc},
                         {"n_points", r.n_points},
                         {"seconds_per_iter", r.seconds_per_iter}});
  return {{"rows", rows_json}, {"loglog_slope", loglog_slope}};
}

}  // namespace specprec
