#include "specprec/metrics.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"
#include "specprec/precode.hpp"

#include <doctest.h>

#include <cmath>

using namespace specprec;

TEST_CASE("EVM: exact reference gives 0, uniform 1% shrink gives 1%") {
  oracles::TestRng rng(20);
  CVec d = rng.gaussian_vec(36);
  CHECK(evm(d, d).overall_pct == 0.0);
  auto r = evm(d, 0.99 * d);
  CHECK(r.overall_pct == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(r.per_prb_pct.size() == 3);
  for (long i = 0; i < 3; ++i) CHECK(r.per_prb_pct[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("EVM: per-PRB decomposition reassembles the overall figure") {
  oracles::TestRng rng(21);
  CVec d = rng.gaussian_vec(300), e = rng.gaussian_vec(300);
  auto r = evm(d, d + 0.01 * e);
  // sum over PRBs of err_prb^2 equals the total squared error
  double total_err = 0.0, total_ref = d.squaredNorm();
  for (long p = 0; p < r.per_prb_pct.size(); ++p) {
    double ref_p = d.segment(12 * p, 12).squaredNorm();
    total_err += std::pow(r.per_prb_pct[p] / 100.0, 2) * ref_p;
  }
  CHECK(std::sqrt(total_err / total_ref) * 100.0 ==
        doctest::Approx(r.overall_pct).epsilon(1e-10));
  CHECK_THROWS(evm(CVec::Zero(12), CVec::Zero(12)));
}

TEST_CASE("PSD: zero input reports the floor sentinel") {
  auto cfg = fixtures::carrier512();
  std::vector<CVec> w = {CVec::Zero(cfg.oversampling * (cfg.fft_size + cfg.cp_len))};
  auto psd = psd_periodogram(w, cfg, 100e3);
  CHECK(psd.psd_dbm_per_100khz.maxCoeff() <= -400.0 + 1e-9);
  CHECK(psd.n_symbols_averaged == 1);
  // frequency axis is strictly increasing and spans +/- fs/2
  for (long i = 1; i < psd.freqs_hz.size(); ++i) CHECK(psd.freqs_hz[i] > psd.freqs_hz[i - 1]);
  CHECK(psd.freqs_hz.minCoeff() >= -cfg.sample_rate_hz() / 2 - 1.0);
  CHECK(psd.freqs_hz.maxCoeff() <= cfg.sample_rate_hz() / 2 + 1.0);
}

TEST_CASE("PSD: single subcarrier concentrates at its frequency") {
  auto cfg = fixtures::carrier512();
  OfdmSymbol d = OfdmSymbol::Zero(300);
  d[150 + 40] = 1.0;  // physical frequency +40 subcarriers = 600 kHz
  std::vector<CVec> w = {ofdm_modulate(cfg, d)};
  auto psd = psd_periodogram(w, cfg, 100e3);
  long imax = 0;
  psd.psd_dbm_per_100khz.maxCoeff(&imax);
  CHECK(std::abs(psd.freqs_hz[imax] - 600e3) < 100e3);
}

TEST_CASE("PSD: integrated density is Parseval-consistent with waveform power") {
  auto cfg = fixtures::carrier512();
  std::vector<CVec> w;
  for (int i = 0; i < 20; ++i)
    w.push_back(ofdm_modulate(cfg, gen_ofdm_symbol(cfg, {16}, mix_seed(3, i))));
  auto psd = psd_periodogram(w, cfg, 100e3);
  // sum over bins of (linear PSD * bin/window) equals the mean symbol power;
  // the window width is the rbw quantized to an odd number of bins
  double bin_hz = cfg.sample_rate_hz() / psd.freqs_hz.size();
  double window_hz = (2.0 * std::llround(100e3 / bin_hz / 2.0) + 1.0) * bin_hz;
  double integrated = 0.0;
  for (long i = 0; i < psd.psd_dbm_per_100khz.size(); ++i)
    integrated += std::pow(10.0, psd.psd_dbm_per_100khz[i] / 10.0) * bin_hz / window_hz;
  CHECK(integrated == doctest::Approx(mean_waveform_power(w)).epsilon(1e-3));
}

TEST_CASE("ACLR: brick-wall spectrum saturates the cap, equal split gives 0 dB") {
  auto cfg = fixtures::carrier512();
  const long nbin = 2048;
  PsdEstimate psd;
  psd.freqs_hz.setLinSpaced(nbin, -cfg.sample_rate_hz() / 2, cfg.sample_rate_hz() / 2);
  psd.psd_dbm_per_100khz = RVec::Constant(nbin, -10000.0);  // numerically empty
  for (long i = 0; i < nbin; ++i)
    if (std::abs(psd.freqs_hz[i]) <= 2.25e6) psd.psd_dbm_per_100khz[i] = -20.0;
  CHECK(aclr_first_adjacent(psd, cfg) == doctest::Approx(400.0));

  // copy the in-band block into both adjacent channels -> ACLR exactly 0 dB
  for (long i = 0; i < nbin; ++i)
    if (std::abs(std::abs(psd.freqs_hz[i]) - 5e6) <= 2.25e6) psd.psd_dbm_per_100khz[i] = -20.0;
  CHECK(aclr_first_adjacent(psd, cfg) == doctest::Approx(0.0).epsilon(1e-9));

  // ACLR is a power ratio: shifting the whole PSD by +13 dB changes nothing
  PsdEstimate shifted = psd;
  shifted.psd_dbm_per_100khz.array() += 13.0;
  CHECK(aclr_first_adjacent(shifted, cfg) ==
        doctest::Approx(aclr_first_adjacent(psd, cfg)).epsilon(1e-9));
}

TEST_CASE("ACLR: asymmetric adjacent power reports the worse side") {
  auto cfg = fixtures::carrier512();
  const long nbin = 2048;
  PsdEstimate psd;
  psd.freqs_hz.setLinSpaced(nbin, -cfg.sample_rate_hz() / 2, cfg.sample_rate_hz() / 2);
  psd.psd_dbm_per_100khz = RVec::Constant(nbin, -400.0);
  for (long i = 0; i < nbin; ++i) {
    if (std::abs(psd.freqs_hz[i]) <= 2.25e6) psd.psd_dbm_per_100khz[i] = -20.0;
    if (std::abs(psd.freqs_hz[i] - 5e6) <= 2.25e6) psd.psd_dbm_per_100khz[i] = -50.0;
    if (std::abs(psd.freqs_hz[i] + 5e6) <= 2.25e6) psd.psd_dbm_per_100khz[i] = -60.0;
  }
  CHECK(aclr_first_adjacent(psd, cfg) == doctest::Approx(30.0).epsilon(1e-9));
  // span too small for the geometry
  PsdEstimate narrow;
  narrow.freqs_hz.setLinSpaced(64, -1e6, 1e6);
  narrow.psd_dbm_per_100khz = RVec::Constant(64, -20.0);
  CHECK_THROWS_AS(aclr_first_adjacent(narrow, cfg), std::invalid_argument);
}

TEST_CASE("sem_margin: definitional check against a naive loop") {
  auto s = fixtures::make_masked("sem1", 300);
  std::vector<CVec> syms;
  for (int i = 0; i < 8; ++i) syms.push_back(gen_ofdm_symbol(s.cfg, {16}, mix_seed(5, i)));
  auto margin = sem_margin(s.A, s.mask, syms);
  REQUIRE(margin.size() == 8);
  for (int m = 0; m < 8; ++m) {
    double acc = 0.0;
    for (auto& d : syms) acc += std::norm((s.A.rows.row(m) * d)(0));
    acc /= syms.size();
    CHECK(margin[m] == doctest::Approx(10.0 * std::log10(acc / s.mask.gamma[m])).epsilon(1e-9));
  }
}

TEST_CASE("sem_margin: NSP output is far below any mask") {
  auto s = fixtures::make_masked("sem2", 300);
  std::vector<CVec> syms;
  for (int i = 0; i < 4; ++i) {
    auto d = gen_ofdm_symbol(s.cfg, {16}, mix_seed(6, i));
    syms.push_back(nsp_precode(s.A, d).d_bar);
  }
  CHECK(sem_margin(s.A, s.mask, syms).maxCoeff() < -80.0);
}

TEST_CASE("calibration: in-band plateau lands on the reference level") {
  auto cfg = fixtures::carrier512();
  auto cal = measure_calibration(cfg, {16}, 600, 0xfeed);
  CHECK(cal.n_symbols == 600);
  CHECK(cal.gamma_cal > 0.0);
  // re-measure the plateau independently with the published offset applied
  std::vector<CVec> w;
  for (int i = 0; i < 200; ++i)
    w.push_back(ofdm_modulate(cfg, gen_ofdm_symbol(cfg, {16}, mix_seed(0xabc, i))));
  auto psd = psd_periodogram(w, cfg, 100e3, cal.psd_offset_db);
  double acc = 0.0;
  int count = 0;
  for (long i = 0; i < psd.freqs_hz.size(); ++i)
    if (std::abs(psd.freqs_hz[i]) < 1.4e6) {  // central portion of the 4.5 MHz occupation
      acc += psd.psd_dbm_per_100khz[i];
      ++count;
    }
  CHECK(acc / count == doctest::Approx(-21.5).epsilon(0.02));
}
