#include "specprec/metrics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specprec {

namespace {
constexpr double kDbFloorMetrics = -400.0;
constexpr double kDbCap = 400.0;

double to_db(double lin) {
  return lin > 0.0 ? 10.0 * std::log10(lin) : kDbFloorMetrics;
}
}  // namespace

EvmReport evm(const OfdmSymbol& d, const CVec& d_bar, int prb_size) {
  if (d.size() != d_bar.size()) throw std::invalid_argument("EVM: length mismatch");
  double ref = d.squaredNorm();
  if (!(ref > 0.0)) throw std::invalid_argument("EVM: zero-norm reference");
  EvmReport rep;
  rep.overall_pct = std::sqrt((d - d_bar).squaredNorm() / ref) * 100.0;
  const int n = static_cast<int>(d.size());
  const int n_prb = (n + prb_size - 1) / prb_size;
  rep.per_prb_pct.resize(n_prb);
  for (int p = 0; p < n_prb; ++p) {
    int lo = p * prb_size;
    int len = std::min(prb_size, n - lo);
    double rp = d.segment(lo, len).squaredNorm();
    double ep = (d.segment(lo, len) - d_bar.segment(lo, len)).squaredNorm();
    rep.per_prb_pct[p] = rp > 0.0 ? std::sqrt(ep / rp) * 100.0 : 0.0;
  }
  return rep;
}

double mean_waveform_power(const std::vector<CVec>& waveforms) {
  double acc = 0.0;
  long samples = 0;
  for (const auto& w : waveforms) {
    acc += w.squaredNorm();
    samples += w.size();
  }
  return samples > 0 ? acc / static_cast<double>(samples) : 0.0;
}

PsdEstimate psd_periodogram(const std::vector<CVec>& waveforms, const CarrierConfig& cfg,
                            double rbw_hz, double calibration_db) {
  if (waveforms.empty()) throw std::invalid_argument("PSD: no waveforms");
  const long L = waveforms.front().size();
  for (const auto& w : waveforms)
    if (w.size() != L) throw std::invalid_argument("PSD: inconsistent waveform lengths");
  const double fs = cfg.sample_rate_hz();
  const double bin_hz = fs / static_cast<double>(L);
  if (rbw_hz < bin_hz) throw std::invalid_argument("PSD: rbw below bin width");

  // mean |X|^2 across symbols, rectangular window
  Eigen::FFT<double> fft;
  RVec mean_sq = RVec::Zero(L);
  std::vector<Complex> in(static_cast<size_t>(L)), out(static_cast<size_t>(L));
  for (const auto& w : waveforms) {
    for (long n = 0; n < L; ++n) in[static_cast<size_t>(n)] = w[n];
    fft.fwd(out, in);
    for (long k = 0; k < L; ++k) mean_sq[k] += std::norm(out[static_cast<size_t>(k)]);
  }
  mean_sq /= static_cast<double>(waveforms.size());

  // per-Hz density: |X|^2 / (L * fs); Parseval: sum(density)*bin = mean power
  RVec density(L);
  for (long k = 0; k < L; ++k) density[k] = mean_sq[k] / (static_cast<double>(L) * fs);

  // fftshift to strictly increasing frequency
  PsdEstimate est;
  est.freqs_hz.resize(L);
  RVec shifted(L);
  const long half = L / 2;
  for (long k = 0; k < L; ++k) {
    long src = (k + half) % L;
    est.freqs_hz[k] = (static_cast<double>(k) - half) * bin_hz;
    shifted[k] = density[src];
  }

  // integrate a sliding rbw window centered at each bin
  const long halfwin = std::max<long>(0, static_cast<long>(std::llround(rbw_hz / bin_hz / 2.0)));
  est.psd_dbm_per_100khz.resize(L);
  for (long k = 0; k < L; ++k) {
    double acc = 0.0;
    for (long j = k - halfwin; j <= k + halfwin; ++j)
      if (j >= 0 && j < L) acc += shifted[j] * bin_hz;
    est.psd_dbm_per_100khz[k] = to_db(acc) + calibration_db;
  }
  est.n_symbols_averaged = static_cast<int>(waveforms.size());
  est.calibration_db = calibration_db;
  return est;
}

double aclr_first_adjacent(const PsdEstimate& psd, const CarrierConfig& cfg,
                           const AclrGeometry& geom) {
  static_cast<void>(cfg);
  const double half_meas = geom.measurement_bw_hz / 2.0;
  const double span = psd.freqs_hz[psd.freqs_hz.size() - 1];
  if (geom.channel_spacing_hz + half_meas > span + 1.0)
    throw std::invalid_argument("ACLR: PSD span does not cover the adjacent channel");

  auto band_power = [&](double center) {
    double acc = 0.0;
    for (int k = 0; k < psd.freqs_hz.size(); ++k) {
      double f = psd.freqs_hz[k];
      if (f >= center - half_meas && f <= center + half_meas)
        acc += std::pow(10.0, (psd.psd_dbm_per_100khz[k] - psd.calibration_db) / 10.0);
    }
    return acc;  // relative units; ratios only
  };

  double inband = band_power(0.0);
  double left = band_power(-geom.channel_spacing_hz);
  double right = band_power(geom.channel_spacing_hz);
  double adj = std::max(left, right);
  if (adj <= 0.0) return kDbCap;
  if (inband <= 0.0) return -kDbCap;
  return std::clamp(10.0 * std::log10(inband / adj), -kDbCap, kDbCap);
}

RVec sem_margin(const LeakageMatrix& A, const MaskSpec& mask, const std::vector<CVec>& symbols) {
  mask.validate();
  if (mask.size() != A.n_points()) throw std::invalid_argument("mask/leakage size mismatch");
  RVec mean_power = RVec::Zero(A.n_points());
  for (const auto& s : symbols) {
    CVec p = oobe_amplitudes(A, s);
    for (int m = 0; m < p.size(); ++m) mean_power[m] += std::norm(p[m]);
  }
  if (!symbols.empty()) mean_power /= static_cast<double>(symbols.size());
  RVec margin(A.n_points());
  for (int m = 0; m < margin.size(); ++m) margin[m] = to_db(mean_power[m] / mask.gamma[m]);
  return margin;
}

Calibration measure_calibration(const CarrierConfig& cfg, const ConstellationSpec& spec,
                                int n_symbols, std::uint64_t seed, double signal_psd_ref_dbm) {
  cfg.validate();
  if (n_symbols < 1) throw std::invalid_argument("calibration needs >= 1 symbol");

  // In-band test points over the central 2/3 of the allocation, with varied
  // fractional offsets so the average matches a wide-bin PSD reading.
  std::vector<FrequencyPoint> pts;
  double lo = cfg.freq_of_index(cfg.allocated.front());
  double hi = cfg.freq_of_index(cfg.allocated.back());
  double center = (lo + hi) / 2.0;
  double width = (hi - lo) * (2.0 / 3.0);
  const int n_pts = 48;
  for (int i = 0; i < n_pts; ++i)
    pts.push_back({center - width / 2.0 + width * (i + 0.5) / n_pts});
  LeakageMatrix A_in = build_leakage_matrix(cfg, pts);

  double point_acc = 0.0;
  std::vector<CVec> waveforms;
  waveforms.reserve(static_cast<size_t>(n_symbols));
  for (int s = 0; s < n_symbols; ++s) {
    OfdmSymbol d = gen_ofdm_symbol(cfg, spec, mix_seed(seed, static_cast<std::uint64_t>(s)));
    point_acc += (A_in.rows * d).squaredNorm() / n_pts;
    waveforms.push_back(ofdm_modulate(cfg, d));
  }

  Calibration cal;
  cal.gamma_cal = point_acc / n_symbols;
  cal.signal_psd_ref_dbm = signal_psd_ref_dbm;
  cal.n_symbols = n_symbols;

  // raw in-band plateau over the same central region
  PsdEstimate raw = psd_periodogram(waveforms, cfg, 100e3, 0.0);
  double f_lo = (center - width / 2.0) * cfg.subcarrier_spacing_hz;
  double f_hi = (center + width / 2.0) * cfg.subcarrier_spacing_hz;
  double acc = 0.0;
  int count = 0;
  for (int k = 0; k < raw.freqs_hz.size(); ++k)
    if (raw.freqs_hz[k] >= f_lo && raw.freqs_hz[k] <= f_hi) {
      acc += std::pow(10.0, raw.psd_dbm_per_100khz[k] / 10.0);
      ++count;
    }
  if (count == 0) throw std::runtime_error("calibration: no in-band PSD bins");
  cal.psd_offset_db = signal_psd_ref_dbm - 10.0 * std::log10(acc / count);
  return cal;
}

}  // namespace specprec
