#include "specprec/carrier.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <stdexcept>

namespace specprec {

void CarrierConfig::validate() const {
  if (fft_size <= 0) throw std::invalid_argument("fft_size must be positive");
  if (cp_len < 0) throw std::invalid_argument("cp_len must be non-negative");
  if (cp_len >= fft_size) throw std::invalid_argument("cp_len must be < fft_size");
  if (subcarrier_spacing_hz <= 0)
    throw std::invalid_argument("subcarrier_spacing_hz must be positive");
  if (oversampling < 1) throw std::invalid_argument("oversampling must be >= 1");
  if (allocated.empty()) throw std::invalid_argument("allocated set must be non-empty");
  std::vector<bool> seen(static_cast<size_t>(fft_size), false);
  for (int k : allocated) {
    if (k < 0 || k >= fft_size)
      throw std::invalid_argument("allocated index out of [0, fft_size)");
    if (seen[static_cast<size_t>(k)])
      throw std::invalid_argument("allocated indices must be unique");
    seen[static_cast<size_t>(k)] = true;
  }
}

CarrierConfig CarrierConfig::centered(int fft_size, int cp_len, int n_alloc,
                                      double subcarrier_spacing_hz, int oversampling) {
  CarrierConfig cfg;
  cfg.fft_size = fft_size;
  cfg.cp_len = cp_len;
  cfg.subcarrier_spacing_hz = subcarrier_spacing_hz;
  cfg.oversampling = oversampling;
  cfg.allocated.reserve(static_cast<size_t>(n_alloc));
  // frequencies -n/2 .. n/2-1, DC allocated when inside the range
  int lo = -(n_alloc / 2);
  for (int f = lo; f < lo + n_alloc; ++f) {
    int k = f < 0 ? f + fft_size : f;
    cfg.allocated.push_back(k);
  }
  cfg.validate();
  return cfg;
}

void ConstellationSpec::validate() const {
  if (order != 4 && order != 16 && order != 64)
    throw std::invalid_argument("constellation order must be 4, 16 or 64");
}

std::vector<Complex> constellation_points(const ConstellationSpec& spec) {
  spec.validate();
  int side = spec.order == 4 ? 2 : (spec.order == 16 ? 4 : 8);
  // PAM levels +-1, +-3, ... per dimension; mean energy 2(side^2-1)/3
  double norm = std::sqrt(2.0 * (side * side - 1) / 3.0);
  std::vector<Complex> pts;
  pts.reserve(static_cast<size_t>(spec.order));
  for (int i = 0; i < side; ++i)
    for (int q = 0; q < side; ++q)
      pts.emplace_back((2 * i - side + 1) / norm, (2 * q - side + 1) / norm);
  return pts;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// xorshift-free, portable 64-bit generator (splitmix64 stream)
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t s) : state(s) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

}  // namespace

OfdmSymbol gen_ofdm_symbol(const CarrierConfig& cfg, const ConstellationSpec& spec,
                           std::uint64_t seed) {
  cfg.validate();
  const auto pts = constellation_points(spec);
  const std::uint64_t mask = static_cast<std::uint64_t>(spec.order) - 1;  // orders are powers of two
  SplitMix64 rng(seed);
  OfdmSymbol d(cfg.n_alloc());
  for (int i = 0; i < cfg.n_alloc(); ++i) d[i] = pts[rng.next() & mask];
  return d;
}

CVec ofdm_modulate(const CarrierConfig& cfg, const OfdmSymbol& d) {
  cfg.validate();
  if (d.size() != cfg.n_alloc())
    throw std::invalid_argument("symbol length does not match allocation");
  const int O = cfg.oversampling;
  const int nfft = O * cfg.fft_size;
  const int cp = O * cfg.cp_len;

  std::vector<Complex> grid(static_cast<size_t>(nfft), Complex(0.0, 0.0));
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.fft_size));
  for (int j = 0; j < cfg.n_alloc(); ++j) {
    int k = cfg.allocated[static_cast<size_t>(j)];
    double f = cfg.freq_of_index(k);
    int bin = f < 0 ? static_cast<int>(f) + nfft : static_cast<int>(f);
    grid[static_cast<size_t>(bin)] += scale * d[j];
  }

  Eigen::FFT<double> fft;
  std::vector<Complex> body(static_cast<size_t>(nfft));
  fft.inv(body, grid);  // Eigen's inv applies 1/nfft
  for (auto& v : body) v *= static_cast<double>(nfft);

  CVec out(cp + nfft);
  for (int n = 0; n < cp; ++n) out[n] = body[static_cast<size_t>(nfft - cp + n)];
  for (int n = 0; n < nfft; ++n) out[cp + n] = body[static_cast<size_t>(n)];
  return out;
}

}  // namespace specprec
