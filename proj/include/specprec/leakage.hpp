#pragma once

#include "specprec/carrier.hpp"

#include <string>
#include <vector>

namespace specprec {

/// Out-of-band measurement frequency, in subcarrier-spacing units from DC.
/// May be fractional and negative.
struct FrequencyPoint {
  double nu = 0.0;
};

/// M discrete frequency points with linear power thresholds in the same
/// normalization as |a(nu_m)^T d|^2.
struct MaskSpec {
  std::vector<FrequencyPoint> points;
  RVec gamma;
  std::string label;

  void validate() const;
  int size() const { return static_cast<int>(points.size()); }
};

/// The M x n_alloc operator mapping allocated frequency-domain data to
/// out-of-band amplitudes, row m = a(nu_m)^T restricted to allocated columns.
struct LeakageMatrix {
  CMat rows;             ///< M x n_alloc
  CarrierConfig carrier;

  int n_points() const { return static_cast<int>(rows.rows()); }
};

/// One entry a(nu, k) of the leakage operator: the DTFT of the CP-OFDM basis
/// function of subcarrier k evaluated at frequency nu. Degenerate offsets
/// ((nu-k)/N integer) take the Dirichlet-kernel limit.
Complex leakage_coefficient(const CarrierConfig& cfg, double nu, int k);

LeakageMatrix build_leakage_matrix(const CarrierConfig& cfg,
                                   const std::vector<FrequencyPoint>& points);

/// Converts mask levels (dBm/100kHz) relative to the signal PSD reference into
/// linear thresholds on |a(nu_m)^T d|^2. calibration_m is the measured constant
/// linking "PSD in a 100 kHz bin" to the discrete-point power.
RVec mask_to_gamma(const RVec& mask_dbm_per_100khz, double signal_psd_dbm_per_100khz,
                   const RVec& per_point_calibration);

/// p(nu) = A d.
CVec oobe_amplitudes(const LeakageMatrix& A, const OfdmSymbol& d);

/// Parses mask files: lines of "frequency_khz mask_dbm_per_100khz"
/// (whitespace or comma separated, '#' comments).
struct MaskDef {
  std::vector<double> freq_khz;
  std::vector<double> level_dbm_per_100khz;
  std::string label;
};

MaskDef load_mask_file(const std::string& path);
MaskDef mask_preset(const std::string& name);  ///< "sem1" or "sem2"
std::vector<std::string> mask_preset_names();

}  // namespace specprec
