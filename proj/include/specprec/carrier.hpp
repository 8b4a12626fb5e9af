#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

namespace specprec {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using Complex = std::complex<double>;

/// OFDM numerology: grid size, cyclic prefix, allocation and sampling.
struct CarrierConfig {
  int fft_size = 512;                    ///< N, subcarriers on the grid
  int cp_len = 36;                       ///< N_CP, samples at base rate
  std::vector<int> allocated;            ///< grid indices in [0, N), ordered by physical frequency
  double subcarrier_spacing_hz = 15e3;
  int oversampling = 1;

  /// Throws std::invalid_argument if any invariant is broken.
  void validate() const;

  int n_alloc() const { return static_cast<int>(allocated.size()); }
  double sample_rate_hz() const {
    return static_cast<double>(fft_size) * subcarrier_spacing_hz * oversampling;
  }
  /// Signed frequency of grid index k, in subcarrier-spacing units from DC.
  double freq_of_index(int k) const {
    return k >= fft_size / 2 ? static_cast<double>(k - fft_size) : static_cast<double>(k);
  }

  /// Centered allocation of n_alloc subcarriers spanning [-n/2, n/2), DC included.
  static CarrierConfig centered(int fft_size, int cp_len, int n_alloc,
                                double subcarrier_spacing_hz, int oversampling);
};

/// Gray-mapped square QAM with exact unit average energy.
struct ConstellationSpec {
  int order = 16;  ///< one of 4, 16, 64
  void validate() const;
};

/// Frequency-domain data on the allocated subcarriers (length n_alloc),
/// zero on the rest of the grid by convention.
using OfdmSymbol = CVec;

/// The constellation alphabet, normalized so the mean power is exactly 1.
std::vector<Complex> constellation_points(const ConstellationSpec& spec);

/// Deterministic i.i.d. uniform draw over the alphabet; same seed, same symbol.
OfdmSymbol gen_ofdm_symbol(const CarrierConfig& cfg, const ConstellationSpec& spec,
                           std::uint64_t seed);

/// CP-prefixed oversampled time-domain waveform, 1/sqrt(N) scaling.
/// Output length oversampling*(N + N_CP); sample n corresponds to time
/// (n - O*N_CP)/O so the DTFT of the result matches the leakage operator's
/// phase convention.
CVec ofdm_modulate(const CarrierConfig& cfg, const OfdmSymbol& d);

/// Stateless mixing of a base seed and a stream index (symbol number).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace specprec
