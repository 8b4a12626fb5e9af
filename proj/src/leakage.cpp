#include "specprec/leakage.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace specprec {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDegenerateSin = 1e-12;
}  // namespace

void MaskSpec::validate() const {
  if (static_cast<int>(points.size()) != gamma.size())
    throw std::invalid_argument("mask points and gamma lengths differ");
  for (int i = 0; i < gamma.size(); ++i)
    if (!(gamma[i] > 0.0)) throw std::invalid_argument("mask gamma must be positive");
}

Complex leakage_coefficient(const CarrierConfig& cfg, double nu, int k) {
  if (k < 0 || k >= cfg.fft_size)
    throw std::invalid_argument("subcarrier index out of [0, fft_size)");
  const double N = static_cast<double>(cfg.fft_size);
  const double L = N + cfg.cp_len;
  const double x = kPi * (nu - k) / N;
  const double scale = 1.0 / std::sqrt(N);
  const Complex phase = std::exp(Complex(0.0, x * (cfg.cp_len - cfg.fft_size + 1)));
  const double s = std::sin(x);
  double ratio;
  if (std::abs(s) < kDegenerateSin) {
    // 0/0 limit of the Dirichlet kernel: L*cos(Lx)/cos(x) at x = p*pi
    ratio = L * std::cos(L * x) / std::cos(x);
  } else {
    ratio = std::sin(L * x) / s;
  }
  return scale * phase * ratio;
}

LeakageMatrix build_leakage_matrix(const CarrierConfig& cfg,
                                   const std::vector<FrequencyPoint>& points) {
  cfg.validate();
  if (points.empty()) throw std::invalid_argument("no frequency points");
  LeakageMatrix A;
  A.carrier = cfg;
  A.rows.resize(static_cast<int>(points.size()), cfg.n_alloc());
  for (size_t m = 0; m < points.size(); ++m)
    for (int j = 0; j < cfg.n_alloc(); ++j)
      A.rows(static_cast<int>(m), j) =
          leakage_coefficient(cfg, points[m].nu, cfg.allocated[static_cast<size_t>(j)]);
  return A;
}

RVec mask_to_gamma(const RVec& mask_dbm_per_100khz, double signal_psd_dbm_per_100khz,
                   const RVec& per_point_calibration) {
  if (mask_dbm_per_100khz.size() != per_point_calibration.size())
    throw std::invalid_argument("mask and calibration lengths differ");
  RVec gamma(mask_dbm_per_100khz.size());
  for (int m = 0; m < gamma.size(); ++m)
    gamma[m] = per_point_calibration[m] *
               std::pow(10.0, (mask_dbm_per_100khz[m] - signal_psd_dbm_per_100khz) / 10.0);
  return gamma;
}

CVec oobe_amplitudes(const LeakageMatrix& A, const OfdmSymbol& d) {
  if (d.size() != A.rows.cols()) throw std::invalid_argument("dimension mismatch");
  return A.rows * d;
}

MaskDef load_mask_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mask file: " + path);
  MaskDef def;
  def.label = path;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (auto& c : line)
      if (c == ',') c = ' ';
    std::istringstream ss(line);
    double f, lvl;
    if (!(ss >> f)) continue;  // blank line
    if (!(ss >> lvl))
      throw std::runtime_error("mask file " + path + ": line " + std::to_string(lineno) +
                               ": expected (frequency_khz, mask_dbm_per_100khz)");
    def.freq_khz.push_back(f);
    def.level_dbm_per_100khz.push_back(lvl);
  }
  if (def.freq_khz.empty()) throw std::runtime_error("mask file " + path + " has no points");
  return def;
}

MaskDef mask_preset(const std::string& name) {
  MaskDef def;
  def.label = name;
  // Points are listed as +/- pairs from the band edge inwards; sequential
  // algorithms visit constraints in this order and it measurably improves
  // early-sweep mask margins versus a frequency-sorted listing.
  def.freq_khz = {-5010, 5010, -4995, 4995, -2565, 2565, -2550, 2550};
  if (name == "sem1") {
    def.level_dbm_per_100khz = {-75, -75, -75, -75, -65, -65, -65, -65};
  } else if (name == "sem2") {
    def.level_dbm_per_100khz = {-85, -85, -85, -85, -75, -75, -75, -75};
  } else {
    throw std::runtime_error("unknown mask preset: " + name);
  }
  return def;
}

std::vector<std::string> mask_preset_names() { return {"sem1", "sem2"}; }

}  // namespace specprec
