#include "motif/oracle.hpp"

#include <atomic>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "motif/rng.hpp"
#include "motif/util.hpp"

namespace motif::oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMu0 = 4.0e-7 * kPi;      // H/m
constexpr double kSigmaCu = 5.8e7;         // S/m
constexpr double kMetalThicknessUm = 3.0;  // top-metal thickness
constexpr double kK1 = 2.34;               // square-spiral current-sheet constants
constexpr double kK2 = 2.75;
constexpr double kCouplingGammaUm = 20.0;
constexpr double kCoxPerUm2 = 0.12e-15;  // F/um^2
constexpr double kCwwPerUm = 0.08e-15;   // F/um

struct WindingDims {
  double d_avg_um;
  double rho_fill;
  double length_um;
};

// Square-spiral winding of n turns inside a lobe of side D. The inner
// opening is clamped at 5% of D so oversized turn counts stay physical.
WindingDims winding_dims(double outer_um, double width_um, double spacing_um, int turns) {
  const double d_in = std::max(outer_um - 2.0 * turns * (width_um + spacing_um),
                               0.05 * outer_um);
  WindingDims w;
  w.d_avg_um = 0.5 * (outer_um + d_in);
  w.rho_fill = (outer_um - d_in) / (outer_um + d_in);
  w.length_um = 4.0 * turns * w.d_avg_um;
  return w;
}

double spiral_inductance_h(int turns, double d_avg_um, double rho_fill) {
  return kK1 * kMu0 * turns * turns * (d_avg_um * 1e-6) / (1.0 + kK2 * rho_fill);
}

double dc_resistance_ohm(double length_um, double width_um) {
  return (length_um * 1e-6) / (kSigmaCu * width_um * 1e-6 * kMetalThicknessUm * 1e-6);
}

}  // namespace

LumpedModel synthesize_lumped(const geometry::XfmrGeometry& g) {
  const WindingDims w1 =
      winding_dims(g.outer_dim_um, g.trace_width_um, g.trace_spacing_um, g.turns_primary);
  const WindingDims w2 =
      winding_dims(g.outer_dim_um, g.trace_width_um, g.trace_spacing_um, g.turns_secondary);

  LumpedModel m;
  m.l1_h = spiral_inductance_h(g.turns_primary, w1.d_avg_um, w1.rho_fill);
  m.l2_h = spiral_inductance_h(g.turns_secondary, w2.d_avg_um, w2.rho_fill);

  double k0 = 0.9;
  if (g.tmpl == geometry::XfmrTemplate::ParallelInductor) k0 = 0.95;
  if (g.tmpl == geometry::XfmrTemplate::EightShaped) k0 = 0.72;
  m.k = std::max(k0 * std::exp(-g.winding_gap_um / kCouplingGammaUm), 1e-3);

  m.rdc1_ohm = dc_resistance_ohm(w1.length_um, g.trace_width_um);
  m.rdc2_ohm = dc_resistance_ohm(w2.length_um, g.trace_width_um);
  m.f_skin_hz = 10e9;

  // each winding's oxide capacitance split over its two ports; stored as the
  // common per-port value
  const double area1 = w1.length_um * g.trace_width_um;
  const double area2 = w2.length_um * g.trace_width_um;
  m.cox_f = kCoxPerUm2 * (area1 + area2) / 4.0;
  m.cww_f = kCwwPerUm * std::min(w1.length_um, w2.length_um);
  return m;
}

rfnet::SParamTensor solve_sparams(const LumpedModel& m, const rfnet::FrequencyGrid& grid) {
  using cd = std::complex<double>;
  rfnet::SParamTensor t(grid);
  const double mutual = m.k * std::sqrt(m.l1_h * m.l2_h);
  const Eigen::Matrix4cd eye = Eigen::Matrix4cd::Identity();
  for (int k = 0; k < grid.points; ++k) {
    const double f = grid.freq_ghz(k) * 1e9;
    const double omega = 2.0 * kPi * f;
    const double skin = 1.0 + std::sqrt(f / m.f_skin_hz);
    const cd jw(0.0, omega);

    // coupled winding branches: V = Zb * I, branch a = nodes (1,2), b = (3,4)
    Eigen::Matrix2cd zb;
    zb << cd(m.rdc1_ohm * skin, omega * m.l1_h), jw * mutual,
          jw * mutual, cd(m.rdc2_ohm * skin, omega * m.l2_h);
    const Eigen::Matrix2cd yb = zb.inverse();

    Eigen::Matrix4cd y = Eigen::Matrix4cd::Zero();
    auto stamp = [&](int na, int nb, int br_row, int col_pair, int pa, int pb) {
      // current into node na from branch term yb(br_row, col_pair)*(V_pa - V_pb)
      y(na, pa) += yb(br_row, col_pair);
      y(na, pb) -= yb(br_row, col_pair);
      y(nb, pa) -= yb(br_row, col_pair);
      y(nb, pb) += yb(br_row, col_pair);
    };
    stamp(0, 1, 0, 0, 0, 1);
    stamp(0, 1, 0, 1, 2, 3);
    stamp(2, 3, 1, 0, 0, 1);
    stamp(2, 3, 1, 1, 2, 3);

    for (int n = 0; n < 4; ++n) y(n, n) += jw * m.cox_f;

    // inter-winding capacitance, split across the mirror pair (1,3)/(2,4)
    const cd yww = jw * (0.5 * m.cww_f);
    y(0, 0) += yww; y(2, 2) += yww; y(0, 2) -= yww; y(2, 0) -= yww;
    y(1, 1) += yww; y(3, 3) += yww; y(1, 3) -= yww; y(3, 1) -= yww;

    // S = (I - Z0 Y)(I + Z0 Y)^-1 avoids forming Z explicitly
    const Eigen::Matrix4cd a = eye + rfnet::kRefOhm * y;
    Eigen::FullPivLU<Eigen::Matrix4cd> lu(a);
    if (!lu.isInvertible())
      throw OracleError("solve_sparams: singular system at frequency index " + std::to_string(k));
    const Eigen::Matrix4cd s = (eye - rfnet::kRefOhm * y) * lu.inverse();
    if (!s.allFinite())
      throw OracleError("solve_sparams: non-finite S at frequency index " + std::to_string(k));

    t.at(0, k) = s(0, 0);
    t.at(1, k) = s(0, 1);
    t.at(2, k) = s(0, 2);
    t.at(3, k) = s(0, 3);
    t.at(4, k) = s(2, 2);
    t.at(5, k) = s(2, 3);
  }
  return t;
}

Dataset generate_dataset(const geometry::ParamSpace& space, geometry::XfmrTemplate tmpl,
                         int n_samples, const rfnet::FrequencyGrid& grid, std::uint64_t seed,
                         int workers) {
  if (n_samples < 1) throw OracleError("generate_dataset: n_samples must be >= 1");
  if (auto err = space.validate_for(tmpl); !err.empty())
    throw OracleError("generate_dataset: " + err);

  Dataset ds;
  ds.tmpl = tmpl;
  ds.grid = grid;
  ds.seed = seed;
  ds.geometries.resize(n_samples);
  ds.features.resize(static_cast<std::size_t>(n_samples) * geometry::kFeatureLen);
  ds.labels.resize(static_cast<std::size_t>(n_samples) * ds.label_len());

  const double srf_floor = 0.15 * grid.f_max_ghz();
  std::atomic<int> rejections{0};
  std::atomic<bool> failed{false};
  std::string fail_msg;
  std::mutex fail_mu;

  parallel_for(static_cast<std::size_t>(n_samples), workers, [&](std::size_t i) {
    if (failed.load()) return;
    try {
      for (int attempt = 0;; ++attempt) {
        if (attempt >= 200)
          throw OracleError("generate_dataset: SRF rejection cap hit for sample " +
                            std::to_string(i));
        const std::uint64_t s = mix_seed(mix_seed(seed, i), static_cast<std::uint64_t>(attempt));
        const auto g = geometry::sample_geometry(space, tmpl, s);
        const auto tensor = solve_sparams(synthesize_lumped(g), grid);
        const auto srf = rfnet::detect_srf(tensor);
        if (srf.found && srf.srf_ghz < srf_floor) {
          rejections.fetch_add(1);
          continue;
        }
        ds.geometries[i] = g;
        const auto feat = geometry::feature_vector(g);
        for (int c = 0; c < geometry::kFeatureLen; ++c)
          ds.features[i * geometry::kFeatureLen + c] = static_cast<float>(feat[c]);
        const auto packed = rfnet::pack(tensor);
        float* dst = ds.labels.data() + i * static_cast<std::size_t>(ds.label_len());
        for (std::size_t j = 0; j < packed.size(); ++j) dst[j] = static_cast<float>(packed[j]);
        return;
      }
    } catch (const std::exception& e) {
      std::scoped_lock lk(fail_mu);
      failed.store(true);
      if (fail_msg.empty()) fail_msg = e.what();
    }
  });
  if (failed.load()) throw OracleError(fail_msg);

  ds.rejections = rejections.load();
  const double rate =
      static_cast<double>(ds.rejections) / static_cast<double>(ds.rejections + n_samples);
  if (rate > 0.5)
    throw OracleError("generate_dataset: rejection rate " + std::to_string(rate) +
                      " > 0.5, parameter space mismatched to grid");
  return ds;
}

namespace {
template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
}
}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OracleError("save_dataset: cannot open " + path.string());
  out.write("MOTIF1\0", 7);
  write_pod(out, static_cast<std::uint32_t>(ds.size()));
  write_pod(out, static_cast<std::uint32_t>(geometry::kFeatureLen));
  write_pod(out, static_cast<std::uint32_t>(ds.grid.points));
  write_pod(out, ds.grid.f_start_ghz);
  write_pod(out, ds.grid.f_step_ghz);
  for (int i = 0; i < ds.size(); ++i) {
    out.write(reinterpret_cast<const char*>(ds.feature_row(i)),
              sizeof(float) * geometry::kFeatureLen);
    out.write(reinterpret_cast<const char*>(ds.label_row(i)),
              sizeof(float) * static_cast<std::size_t>(ds.label_len()));
  }
  if (!out) throw OracleError("save_dataset: write failed for " + path.string());
  out.close();

  std::ofstream man(path.string() + ".manifest");
  if (!man) throw OracleError("save_dataset: cannot open manifest");
  man << "MOTIF dataset manifest\n";
  man << "template=" << geometry::template_name(ds.tmpl) << "\n";
  man << "samples=" << ds.size() << "\n";
  man << "feature_len=" << geometry::kFeatureLen << "\n";
  man << "points=" << ds.grid.points << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", ds.grid.f_start_ghz);
  man << "f_start_ghz=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", ds.grid.f_step_ghz);
  man << "f_step_ghz=" << buf << "\n";
  man << "oracle_version=" << ds.oracle_version << "\n";
  man << "seed=" << ds.seed << "\n";
  man << "rejections=" << ds.rejections << "\n";
  for (int i = 0; i < ds.size(); ++i) {
    man << "\n[sample " << i << "]\n";
    man << geometry::to_text_block(ds.geometries[i]);
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OracleError("load_dataset: cannot open " + path.string());
  char magic[7];
  in.read(magic, 7);
  if (!in || std::memcmp(magic, "MOTIF1\0", 7) != 0)
    throw OracleError("load_dataset: bad magic in " + path.string());
  std::uint32_t n = 0, flen = 0, kpts = 0;
  Dataset ds;
  read_pod(in, n);
  read_pod(in, flen);
  read_pod(in, kpts);
  read_pod(in, ds.grid.f_start_ghz);
  read_pod(in, ds.grid.f_step_ghz);
  if (flen != geometry::kFeatureLen) throw OracleError("load_dataset: feature length mismatch");
  ds.grid.points = static_cast<int>(kpts);
  ds.features.resize(static_cast<std::size_t>(n) * flen);
  ds.labels.resize(static_cast<std::size_t>(n) * 12 * kpts);
  ds.geometries.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(ds.features.data() + static_cast<std::size_t>(i) * flen),
            sizeof(float) * flen);
    in.read(reinterpret_cast<char*>(ds.labels.data() + static_cast<std::size_t>(i) * 12 * kpts),
            sizeof(float) * 12 * kpts);
  }
  if (!in) throw OracleError("load_dataset: truncated file " + path.string());

  std::ifstream man(path.string() + ".manifest");
  if (!man) throw OracleError("load_dataset: missing sidecar manifest for " + path.string());
  std::string line;
  std::string block;
  int sample = -1;
  auto flush = [&] {
    if (sample >= 0 && sample < static_cast<int>(n) && !block.empty())
      ds.geometries[sample] = geometry::from_text_block(block);
    block.clear();
  };
  while (std::getline(man, line)) {
    std::string s = trim(line);
    if (s.rfind("[sample ", 0) == 0) {
      flush();
      sample = std::stoi(s.substr(8));
      continue;
    }
    if (sample >= 0) {
      block += s;
      block += '\n';
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = s.substr(0, eq), val = s.substr(eq + 1);
    if (key == "template") {
      auto t = geometry::template_from_name(val);
      if (!t) throw OracleError("load_dataset: unknown template " + val);
      ds.tmpl = *t;
    } else if (key == "seed") {
      ds.seed = std::stoull(val);
    } else if (key == "rejections") {
      ds.rejections = std::stoi(val);
    } else if (key == "oracle_version") {
      ds.oracle_version = val;
    }
  }
  flush();
  return ds;
}

rfnet::SParamTensor label_tensor(const Dataset& ds, int i) {
  std::vector<double> v(static_cast<std::size_t>(ds.label_len()));
  const float* row = ds.label_row(i);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = row[j];
  return rfnet::unpack(v, ds.grid);
}

}  // namespace motif::oracle
