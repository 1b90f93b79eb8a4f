#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace motif::geometry {

enum class XfmrTemplate { OneToOne, MToN, ParallelInductor, EightShaped };

const char* template_name(XfmrTemplate t);  // "1to1", "mn", "parallel", "8shape"
std::optional<XfmrTemplate> template_from_name(std::string_view name);

// Parametric description of one transformer layout candidate.
// All lengths in micrometers.
struct XfmrGeometry {
  XfmrTemplate tmpl = XfmrTemplate::MToN;
  int turns_primary = 1;    // M, 1..4
  int turns_secondary = 1;  // N, 1..4
  double outer_dim_um = 100.0;
  double trace_width_um = 5.0;
  double trace_spacing_um = 3.0;
  double winding_gap_um = 2.0;  // vertical/lateral gap between windings

  bool operator==(const XfmrGeometry&) const = default;
};

// Empty string when valid, otherwise a description of the violated constraint.
std::string validate(const XfmrGeometry& g);
inline bool is_valid(const XfmrGeometry& g) { return validate(g).empty(); }

// Footprint area. One square lobe of side outer_dim; the 8-shaped template
// occupies two lobes.
double area_mm2(const XfmrGeometry& g);

// Fixed order: [M, N, outer_dim, trace_width, trace_spacing, winding_gap].
constexpr int kFeatureLen = 6;
std::array<double, kFeatureLen> feature_vector(const XfmrGeometry& g);
XfmrGeometry geometry_from_features(XfmrTemplate t, const double* f);

struct Interval {
  double lo = 0.0, hi = 0.0;
};

struct ParamSpace {
  Interval outer_dim_um{40.0, 300.0};
  Interval trace_width_um{2.0, 12.0};
  Interval trace_spacing_um{2.0, 10.0};
  Interval winding_gap_um{1.0, 6.0};
  std::vector<std::pair<int, int>> turn_pairs;  // allowed (M, N)

  static ParamSpace defaults(XfmrTemplate t);
  // Empty string when usable for the template, else the problem.
  std::string validate_for(XfmrTemplate t) const;
};

struct SampleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform per-interval draw, uniform over turn pairs, rejection on the
// footprint constraint with a 1000-retry cap. Deterministic per seed.
XfmrGeometry sample_geometry(const ParamSpace& space, XfmrTemplate t, std::uint64_t seed);

// key=value text block, one field per line (manifest / report format).
std::string to_text_block(const XfmrGeometry& g);
XfmrGeometry from_text_block(const std::string& block);

}  // namespace motif::geometry
