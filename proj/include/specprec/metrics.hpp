#pragma once

#include "specprec/leakage.hpp"

#include <vector>

namespace specprec {

struct EvmReport {
  double overall_pct = 0.0;
  RVec per_prb_pct;  ///< 12-subcarrier groups in allocation order
};

/// EVM against the original symbol as reference: ||d - d_bar|| / ||d|| * 100.
EvmReport evm(const OfdmSymbol& d, const CVec& d_bar, int prb_size = 12);

struct PsdEstimate {
  RVec freqs_hz;                ///< strictly increasing bin centers
  RVec psd_dbm_per_100khz;      ///< 100 kHz-integrated, calibration applied
  int n_symbols_averaged = 0;
  double calibration_db = 0.0;  ///< additive offset applied to the raw estimate
};

/// Averaged rectangular-window periodogram over whole OFDM symbols, integrated
/// to the resolution bandwidth. calibration_db shifts the raw relative scale
/// onto the dBm axis (0 leaves the estimate uncalibrated).
PsdEstimate psd_periodogram(const std::vector<CVec>& waveforms, const CarrierConfig& cfg,
                            double rbw_hz, double calibration_db = 0.0);

/// Mean time-domain power of the waveform set (per sample, linear).
double mean_waveform_power(const std::vector<CVec>& waveforms);

struct AclrGeometry {
  double channel_spacing_hz = 5e6;
  double measurement_bw_hz = 4.5e6;
};

/// 10log10(in-band power / adjacent-channel power) for the first adjacent
/// carrier; returns the worse of the two sides, capped at +/-400 dB.
/// Throws std::invalid_argument when the PSD span cannot cover the geometry.
double aclr_first_adjacent(const PsdEstimate& psd, const CarrierConfig& cfg,
                           const AclrGeometry& geom = {});

/// Per-mask-point margin 10log10(mean_symbols |a(nu_m)^T d|^2 / gamma_m);
/// negative means compliant.
RVec sem_margin(const LeakageMatrix& A, const MaskSpec& mask, const std::vector<CVec>& symbols);

/// Empirical link between the normalized discrete-point powers and the
/// periodogram PSD of the unprecoded signal.
struct Calibration {
  double gamma_cal = 1.0;        ///< mean in-band |a(nu)^T d|^2 (linear)
  double psd_offset_db = 0.0;    ///< added to raw PSD so the in-band plateau reads the reference
  double signal_psd_ref_dbm = -21.5;
  int n_symbols = 0;
};

/// Measures both constants on n_symbols unprecoded symbols: gamma_cal averages
/// |a(nu)^T d|^2 over fractional in-band test points, psd_offset_db pins the
/// in-band periodogram plateau to signal_psd_ref_dbm.
Calibration measure_calibration(const CarrierConfig& cfg, const ConstellationSpec& spec,
                                int n_symbols, std::uint64_t seed,
                                double signal_psd_ref_dbm = -21.5);

}  // namespace specprec
