#include "motif/rfnet.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "motif/util.hpp"

namespace motif::rfnet {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Eigen::Matrix4cd expand_full(const SParamTensor& t, int k) {
  if (k < 0 || k >= t.grid.points) throw RfError("expand_full: frequency index out of range");
  const cd s11 = t.at(0, k), s12 = t.at(1, k), s13 = t.at(2, k), s14 = t.at(3, k);
  const cd s33 = t.at(4, k), s34 = t.at(5, k);
  Eigen::Matrix4cd m;
  m << s11, s12, s13, s14,
       s12, s11, s14, s13,
       s13, s14, s33, s34,
       s14, s13, s34, s33;
  return m;
}

Eigen::MatrixXcd s_to_z(const Eigen::MatrixXcd& s, double z0) {
  const auto n = s.rows();
  Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(eye - s);
  if (!lu.isInvertible()) throw RfError("s_to_z: (I - S) is singular");
  return z0 * (eye + s) * lu.inverse();
}

Eigen::MatrixXcd z_to_s(const Eigen::MatrixXcd& z, double z0) {
  const auto n = z.rows();
  Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(z + z0 * eye);
  if (!lu.isInvertible()) throw RfError("z_to_s: (Z + Z0*I) is singular");
  return (z - z0 * eye) * lu.inverse();
}

Eigen::Matrix2cd mixed_mode_reduce(const Eigen::Matrix4cd& s) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix<cd, 2, 4> md;
  md << r, -r, 0, 0,
        0, 0, r, -r;
  return md * s * md.transpose();
}

Eigen::Matrix2cd dd_impedance(const SParamTensor& t, int k) {
  const Eigen::Matrix2cd sdd = mixed_mode_reduce(expand_full(t, k));
  return s_to_z(sdd, kDiffRefOhm);
}

cd gamma_in_z(const Eigen::Matrix2cd& zdd, const ComplexPortSpec& ports) {
  const cd zin = zdd(0, 0) - zdd(0, 1) * zdd(1, 0) / (zdd(1, 1) + ports.z02);
  const cd den = zin + ports.z01;
  if (std::abs(den) < 1e-3 * std::abs(ports.z01))
    throw RfError("gamma_in: singular termination (Z_in + Z01 ~ 0)");
  return (zin - std::conj(ports.z01)) / den;
}

cd gamma_in(const Eigen::Matrix2cd& sdd, const ComplexPortSpec& ports) {
  if (!(ports.z01.real() > 0.0 && ports.z02.real() > 0.0))
    throw RfError("gamma_in: reference impedances need positive real part");
  return gamma_in_z(s_to_z(sdd, kDiffRefOhm), ports);
}

double loss_mag_z(const Eigen::Matrix2cd& zdd, const ComplexPortSpec& ports) {
  const cd den = (zdd(0, 0) + ports.z01) * (zdd(1, 1) + ports.z02) - zdd(0, 1) * zdd(1, 0);
  if (std::abs(den) == 0.0) throw RfError("loss_mag: singular termination");
  const double gt = 4.0 * ports.z01.real() * ports.z02.real() * std::norm(zdd(1, 0)) /
                    std::norm(den);
  return std::sqrt(std::max(gt, 0.0));
}

double loss_mag(const Eigen::Matrix2cd& sdd, const ComplexPortSpec& ports) {
  if (!(ports.z01.real() > 0.0 && ports.z02.real() > 0.0))
    throw RfError("loss_mag: reference impedances need positive real part");
  return loss_mag_z(s_to_z(sdd, kDiffRefOhm), ports);
}

SrfResult detect_srf(const SParamTensor& t) {
  const int kpts = t.grid.points;
  double prev = dd_impedance(t, 0)(0, 0).imag();
  for (int k = 1; k < kpts; ++k) {
    const double cur = dd_impedance(t, k)(0, 0).imag();
    if (prev > 0.0 && cur <= 0.0) {
      const double f0 = t.grid.freq_ghz(k - 1);
      const double frac = prev / (prev - cur);
      return {f0 + frac * t.grid.f_step_ghz, true};
    }
    prev = cur;
  }
  return {t.grid.f_max_ghz() / 2.0, false};
}

LqResult extract_lq(const SParamTensor& t, int k) {
  const cd zd = dd_impedance(t, k)(0, 0);
  const double omega = 2.0 * kPi * t.grid.freq_ghz(k) * 1e9;
  LqResult r;
  r.inductance_h = zd.imag() / omega;
  r.physical = zd.real() > 0.0;
  r.q = r.physical ? std::min(zd.imag() / zd.real(), kQCap) : kQCap;
  return r;
}

void touchstone_write(const SParamTensor& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RfError("touchstone_write: cannot open " + path.string());
  out << "! 4-port S-parameters\n";
  out << "# GHz S RI R 50\n";
  char buf[64];
  for (int k = 0; k < t.grid.points; ++k) {
    const Eigen::Matrix4cd m = expand_full(t, k);
    for (int row = 0; row < 4; ++row) {
      if (row == 0) {
        std::snprintf(buf, sizeof(buf), "%.12g", t.grid.freq_ghz(k));
        out << buf;
      }
      for (int col = 0; col < 4; ++col) {
        std::snprintf(buf, sizeof(buf), " %.12g %.12g", m(row, col).real(), m(row, col).imag());
        out << buf;
      }
      out << "\n";
    }
  }
}

SParamTensor touchstone_read(const std::filesystem::path& path, std::string* warning) {
  std::ifstream in(path);
  if (!in) throw RfError("touchstone_read: cannot open " + path.string());
  double unit_to_ghz = 0.0;
  bool have_option = false;
  std::vector<double> nums;
  std::string line;
  int lineno = 0;
  int last_data_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto bang = line.find('!'); bang != std::string::npos) line.erase(bang);
    std::string s = trim(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      std::istringstream ls(s.substr(1));
      std::string unit, param, fmt, rtok, rval;
      ls >> unit >> param >> fmt >> rtok >> rval;
      for (auto& c : unit) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      for (auto& c : param) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      for (auto& c : fmt) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      for (auto& c : rtok) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (unit == "HZ") unit_to_ghz = 1e-9;
      else if (unit == "KHZ") unit_to_ghz = 1e-6;
      else if (unit == "MHZ") unit_to_ghz = 1e-3;
      else if (unit == "GHZ") unit_to_ghz = 1.0;
      double rv = 0.0;
      if (unit_to_ghz == 0.0 || param != "S" || fmt != "RI" || rtok != "R" ||
          !parse_double(rval, rv))
        throw RfError("touchstone_read: malformed option line at line " + std::to_string(lineno));
      have_option = true;
      continue;
    }
    if (!have_option)
      throw RfError("touchstone_read: data before option line at line " + std::to_string(lineno));
    std::istringstream ls(s);
    std::string tok;
    while (ls >> tok) {
      double v = 0.0;
      if (!parse_double(tok, v))
        throw RfError("touchstone_read: bad number '" + tok + "' at line " +
                      std::to_string(lineno));
      nums.push_back(v);
    }
    last_data_line = lineno;
  }
  if (!have_option) throw RfError("touchstone_read: missing option line");
  constexpr std::size_t kPerPoint = 1 + 32;
  if (nums.empty() || nums.size() % kPerPoint != 0)
    throw RfError("touchstone_read: truncated data row near line " +
                  std::to_string(last_data_line));
  const int kpts = static_cast<int>(nums.size() / kPerPoint);
  if (kpts < 2) throw RfError("touchstone_read: need at least 2 frequency points");

  std::vector<double> freqs(kpts);
  for (int k = 0; k < kpts; ++k) {
    freqs[k] = nums[static_cast<std::size_t>(k) * kPerPoint] * unit_to_ghz;
    if (k > 0 && !(freqs[k] > freqs[k - 1]))
      throw RfError("touchstone_read: non-monotone frequencies at point " + std::to_string(k));
  }
  FrequencyGrid grid;
  grid.f_start_ghz = freqs[0];
  grid.f_step_ghz = freqs[1] - freqs[0];
  grid.points = kpts;
  for (int k = 0; k < kpts; ++k)
    if (std::abs(freqs[k] - grid.freq_ghz(k)) > 1e-6 * grid.f_step_ghz)
      throw RfError("touchstone_read: non-uniform frequency grid at point " + std::to_string(k));

  SParamTensor t(grid);
  std::ostringstream warn;
  // full-matrix positions of the canonical channels and the symmetry table
  static const int canon_pos[kChannels][2] = {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {2, 2}, {2, 3}};
  static const int mirror_of[4][4] = {{0, 1, 2, 3},   // channel index each entry must equal
                                      {1, 0, 3, 2},
                                      {2, 3, 4, 5},
                                      {3, 2, 5, 4}};
  for (int k = 0; k < kpts; ++k) {
    const double* p = nums.data() + static_cast<std::size_t>(k) * kPerPoint + 1;
    cd m[4][4];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        m[i][j] = cd(p[0], p[1]);
        p += 2;
      }
    for (int c = 0; c < kChannels; ++c) t.at(c, k) = m[canon_pos[c][0]][canon_pos[c][1]];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const cd want = t.at(mirror_of[i][j], k);
        if (std::abs(m[i][j] - want) > 1e-6 && warning) {
          warn << "S" << i + 1 << j + 1 << " at point " << k
               << " violates symmetry; canonical value retained\n";
        }
      }
  }
  if (warning) *warning = warn.str();
  return t;
}

std::vector<double> pack(const SParamTensor& t) {
  const int kpts = t.grid.points;
  std::vector<double> v(static_cast<std::size_t>(12) * kpts);
  for (int c = 0; c < kChannels; ++c)
    for (int k = 0; k < kpts; ++k) {
      v[static_cast<std::size_t>(2 * c) * kpts + k] = t.at(c, k).real();
      v[static_cast<std::size_t>(2 * c + 1) * kpts + k] = t.at(c, k).imag();
    }
  return v;
}

SParamTensor unpack(std::span<const double> v, const FrequencyGrid& grid) {
  if (v.size() != static_cast<std::size_t>(12) * grid.points)
    throw RfError("unpack: length mismatch");
  SParamTensor t(grid);
  const int kpts = grid.points;
  for (int c = 0; c < kChannels; ++c)
    for (int k = 0; k < kpts; ++k)
      t.at(c, k) = cd(v[static_cast<std::size_t>(2 * c) * kpts + k],
                      v[static_cast<std::size_t>(2 * c + 1) * kpts + k]);
  return t;
}

}  // namespace motif::rfnet
