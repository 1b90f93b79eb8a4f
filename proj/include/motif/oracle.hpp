#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motif/geometry.hpp"
#include "motif/rfnet.hpp"

namespace motif::oracle {

inline constexpr char kOracleVersion[] = "lumped-1";

// Two coupled RL branches with per-port oxide capacitance and inter-winding
// capacitance; one SRF per mode, smooth spectra, reciprocal and passive.
struct LumpedModel {
  double l1_h = 0.0, l2_h = 0.0;  // self-inductances
  double k = 0.0;                 // coupling coefficient, (0, 1)
  double rdc1_ohm = 0.0, rdc2_ohm = 0.0;
  double f_skin_hz = 10e9;
  double cox_f = 0.0;  // per-port shunt capacitance to ground
  double cww_f = 0.0;  // inter-winding capacitance
};

LumpedModel synthesize_lumped(const geometry::XfmrGeometry& g);

rfnet::SParamTensor solve_sparams(const LumpedModel& m, const rfnet::FrequencyGrid& grid);

struct Dataset {
  geometry::XfmrTemplate tmpl = geometry::XfmrTemplate::MToN;
  rfnet::FrequencyGrid grid;
  std::uint64_t seed = 0;
  int rejections = 0;
  std::string oracle_version = kOracleVersion;
  std::vector<geometry::XfmrGeometry> geometries;
  std::vector<float> features;  // n * kFeatureLen
  std::vector<float> labels;    // n * 12 * K, pack() order

  int size() const { return static_cast<int>(geometries.size()); }
  int label_len() const { return 12 * grid.points; }
  const float* feature_row(int i) const {
    return features.data() + static_cast<std::size_t>(i) * geometry::kFeatureLen;
  }
  const float* label_row(int i) const {
    return labels.data() + static_cast<std::size_t>(i) * label_len();
  }
};

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Samples whose detected SRF falls below 0.15 * f_max are rejected and
// resampled; aborts if the running rejection rate exceeds 50%.
Dataset generate_dataset(const geometry::ParamSpace& space, geometry::XfmrTemplate tmpl,
                         int n_samples, const rfnet::FrequencyGrid& grid, std::uint64_t seed,
                         int workers = 1);

// Binary container (magic "MOTIF1\0") plus a UTF-8 sidecar manifest at
// <path>.manifest carrying the geometry text blocks.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

rfnet::SParamTensor label_tensor(const Dataset& ds, int i);

}  // namespace motif::oracle
