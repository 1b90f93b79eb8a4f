#pragma once

#include <Eigen/Dense>
#include <complex>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace motif::rfnet {

using cd = std::complex<double>;

constexpr double kRefOhm = 50.0;       // single-ended reference
constexpr double kDiffRefOhm = 100.0;  // differential reference, 2 * 50

struct FrequencyGrid {
  double f_start_ghz = 0.5;
  double f_step_ghz = 0.5;
  int points = 200;

  double freq_ghz(int k) const { return f_start_ghz + f_step_ghz * k; }
  double f_max_ghz() const { return freq_ghz(points - 1); }
  bool operator==(const FrequencyGrid&) const = default;
};

// Stored channel order; the remaining 10 entries of the 4x4 matrix follow
// from reciprocity and the layout mirror symmetry (ports 1<->2, 3<->4).
constexpr int kChannels = 6;  // S11, S12, S13, S14, S33, S34

struct SParamTensor {
  FrequencyGrid grid;
  std::vector<cd> data;  // kChannels * K, indexed c * K + k

  SParamTensor() = default;
  explicit SParamTensor(const FrequencyGrid& g)
      : grid(g), data(static_cast<std::size_t>(kChannels) * g.points) {}

  cd& at(int c, int k) { return data[static_cast<std::size_t>(c) * grid.points + k]; }
  cd at(int c, int k) const { return data[static_cast<std::size_t>(c) * grid.points + k]; }
};

struct ComplexPortSpec {
  cd z01{50.0, 0.0};
  cd z02{50.0, 0.0};
};

struct RfError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Symmetry completion: S21=S12, S31=S13, S41=S14, S43=S34, S22=S11, S44=S33,
// S23=S14, S24=S13, S32=S14, S42=S13. Result is exactly symmetric.
Eigen::Matrix4cd expand_full(const SParamTensor& t, int k);

Eigen::MatrixXcd s_to_z(const Eigen::MatrixXcd& s, double z0);
Eigen::MatrixXcd z_to_s(const Eigen::MatrixXcd& z, double z0);

// Differential-differential 2x2 block, ports (1,2) in / (3,4) out,
// referenced to kDiffRefOhm.
Eigen::Matrix2cd mixed_mode_reduce(const Eigen::Matrix4cd& s);

// Differential 2x2 Z-parameters at grid index k (via mixed_mode_reduce).
Eigen::Matrix2cd dd_impedance(const SParamTensor& t, int k);

// Power-wave (Kurokawa) input reflection with port 2 terminated in z02.
cd gamma_in(const Eigen::Matrix2cd& sdd, const ComplexPortSpec& ports);
cd gamma_in_z(const Eigen::Matrix2cd& zdd, const ComplexPortSpec& ports);

// |L| = sqrt(transducer power gain); 1 = lossless perfect transfer.
double loss_mag(const Eigen::Matrix2cd& sdd, const ComplexPortSpec& ports);
double loss_mag_z(const Eigen::Matrix2cd& zdd, const ComplexPortSpec& ports);

struct SrfResult {
  double srf_ghz = 0.0;
  bool found = false;  // false: no crossing, srf_ghz = f_max / 2
};

// Lowest frequency where Im of the differential primary input impedance
// (secondary open) crosses + to -, linearly interpolated between grid points.
SrfResult detect_srf(const SParamTensor& t);

struct LqResult {
  double inductance_h = 0.0;
  double q = 0.0;
  bool physical = true;  // false when Re(Zd) <= 0
};
constexpr double kQCap = 1e4;

LqResult extract_lq(const SParamTensor& t, int k);

// Touchstone v1 .s4p, option line "# GHz S RI R 50", rows from expand_full.
void touchstone_write(const SParamTensor& t, const std::filesystem::path& path);
// warning (if non-null) collects symmetry-consistency violations > 1e-6;
// canonical entries win.
SParamTensor touchstone_read(const std::filesystem::path& path, std::string* warning = nullptr);

// Dataset wire layout: channel-major, real block then imaginary block per
// channel: S11re[K], S11im[K], S12re[K], ..., S34im[K]. Length 12 * K.
std::vector<double> pack(const SParamTensor& t);
SParamTensor unpack(std::span<const double> v, const FrequencyGrid& grid);

}  // namespace motif::rfnet
