#pragma once

// Shared scenario-scale fixtures for the precoder / metrics / acceptance tests.

#include "oracles.hpp"
#include "specprec/metrics.hpp"
#include "specprec/precode.hpp"

namespace fixtures {

using namespace specprec;

inline CarrierConfig carrier512() { return CarrierConfig::centered(512, 36, 300, 15e3, 2); }

struct MaskedScenario {
  CarrierConfig cfg;
  MaskSpec mask;
  LeakageMatrix A;
  std::vector<Rank1Constraint> constraints;
  Calibration cal;
};

/// The 8-point scenario for the given mask preset, with thresholds derived
/// from a measured calibration over `calib_symbols` unprecoded 16-QAM symbols.
inline MaskedScenario make_masked(const std::string& mask_name, int calib_symbols = 1000,
                                  std::uint64_t calib_seed = 0xca11b001u) {
  MaskedScenario s;
  s.cfg = carrier512();
  s.cal = measure_calibration(s.cfg, {16}, calib_symbols, calib_seed);
  auto def = mask_preset(mask_name);
  s.mask.label = def.label;
  RVec levels(static_cast<long>(def.level_dbm_per_100khz.size()));
  for (size_t i = 0; i < def.freq_khz.size(); ++i) {
    s.mask.points.push_back({def.freq_khz[i] * 1e3 / s.cfg.subcarrier_spacing_hz});
    levels[static_cast<long>(i)] = def.level_dbm_per_100khz[i];
  }
  RVec cal_vec = RVec::Constant(levels.size(), s.cal.gamma_cal);
  s.mask.gamma = mask_to_gamma(levels, s.cal.signal_psd_ref_dbm, cal_vec);
  s.A = build_leakage_matrix(s.cfg, s.mask.points);
  s.constraints = constraints_from(s.A, s.mask.gamma);
  return s;
}

/// Random small constraint instance with thresholds scaled so a typical
/// gaussian d violates some and satisfies others.
inline std::vector<Rank1Constraint> random_constraints(oracles::TestRng& rng, long n, int m,
                                                       double tightness = 0.3) {
  std::vector<Rank1Constraint> cs;
  for (int i = 0; i < m; ++i) {
    CVec u = rng.gaussian_vec(n);
    double b = tightness * rng.uniform(0.2, 2.0) * u.squaredNorm();
    cs.push_back({u, b});
  }
  return cs;
}

}  // namespace fixtures
