#include "motif/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "motif/rng.hpp"
#include "motif/util.hpp"

namespace motif::geometry {

const char* template_name(XfmrTemplate t) {
  switch (t) {
    case XfmrTemplate::OneToOne: return "1to1";
    case XfmrTemplate::MToN: return "mn";
    case XfmrTemplate::ParallelInductor: return "parallel";
    case XfmrTemplate::EightShaped: return "8shape";
  }
  return "?";
}

std::optional<XfmrTemplate> template_from_name(std::string_view name) {
  if (name == "1to1") return XfmrTemplate::OneToOne;
  if (name == "mn") return XfmrTemplate::MToN;
  if (name == "parallel") return XfmrTemplate::ParallelInductor;
  if (name == "8shape") return XfmrTemplate::EightShaped;
  return std::nullopt;
}

std::string validate(const XfmrGeometry& g) {
  if (g.turns_primary < 1 || g.turns_primary > 4) return "turns_primary out of [1,4]";
  if (g.turns_secondary < 1 || g.turns_secondary > 4) return "turns_secondary out of [1,4]";
  if (g.tmpl == XfmrTemplate::OneToOne && (g.turns_primary != 1 || g.turns_secondary != 1))
    return "1to1 template requires M = N = 1";
  if (!(g.outer_dim_um > 0.0)) return "outer_dim must be positive";
  if (!(g.trace_width_um >= 1.0)) return "trace_width must be >= 1 um";
  if (!(g.trace_spacing_um > 0.0)) return "trace_spacing must be positive";
  if (!(g.winding_gap_um > 0.0)) return "winding_gap must be positive";
  const double need = 2.0 * g.turns_primary * (g.trace_width_um + g.trace_spacing_um);
  if (!(g.outer_dim_um > need))
    return "windings do not fit: outer_dim <= 2*M*(trace_width + trace_spacing)";
  return {};
}

double area_mm2(const XfmrGeometry& g) {
  const double lobe = g.outer_dim_um * g.outer_dim_um * 1e-6;  // um^2 -> mm^2
  return g.tmpl == XfmrTemplate::EightShaped ? 2.0 * lobe : lobe;
}

std::array<double, kFeatureLen> feature_vector(const XfmrGeometry& g) {
  return {static_cast<double>(g.turns_primary), static_cast<double>(g.turns_secondary),
          g.outer_dim_um, g.trace_width_um, g.trace_spacing_um, g.winding_gap_um};
}

XfmrGeometry geometry_from_features(XfmrTemplate t, const double* f) {
  XfmrGeometry g;
  g.tmpl = t;
  g.turns_primary = static_cast<int>(std::lround(f[0]));
  g.turns_secondary = static_cast<int>(std::lround(f[1]));
  g.outer_dim_um = f[2];
  g.trace_width_um = f[3];
  g.trace_spacing_um = f[4];
  g.winding_gap_um = f[5];
  return g;
}

ParamSpace ParamSpace::defaults(XfmrTemplate t) {
  ParamSpace s;
  // the outer-dimension ceiling shrinks with the allowed turn counts: large
  // multi-turn windings self-resonate below the usable band and would mostly
  // be rejected at dataset generation time
  switch (t) {
    case XfmrTemplate::OneToOne:
      s.turn_pairs = {{1, 1}};
      s.outer_dim_um = {40.0, 200.0};
      break;
    case XfmrTemplate::MToN:
      for (int m = 1; m <= 4; ++m)
        for (int n = 1; n <= 4; ++n) s.turn_pairs.emplace_back(m, n);
      s.outer_dim_um = {40.0, 120.0};
      break;
    case XfmrTemplate::ParallelInductor:
    case XfmrTemplate::EightShaped:
      s.turn_pairs = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
      s.outer_dim_um = {40.0, 150.0};
      break;
  }
  return s;
}

std::string ParamSpace::validate_for(XfmrTemplate t) const {
  auto bad = [](const Interval& iv) { return !(iv.lo < iv.hi) && !(iv.lo == iv.hi); };
  if (bad(outer_dim_um) || outer_dim_um.lo <= 0.0) return "outer_dim interval invalid";
  if (bad(trace_width_um) || trace_width_um.lo < 1.0) return "trace_width interval invalid";
  if (bad(trace_spacing_um) || trace_spacing_um.lo <= 0.0) return "trace_spacing interval invalid";
  if (bad(winding_gap_um) || winding_gap_um.lo <= 0.0) return "winding_gap interval invalid";
  if (turn_pairs.empty()) return "no (M,N) pairs allowed";
  for (auto [m, n] : turn_pairs) {
    if (m < 1 || m > 4 || n < 1 || n > 4) return "(M,N) pair out of [1,4]";
    if (t == XfmrTemplate::OneToOne && (m != 1 || n != 1)) return "1to1 allows only (1,1)";
  }
  return {};
}

namespace {
double draw(Rng& rng, const Interval& iv) {
  if (iv.lo == iv.hi) return iv.lo;
  return rng.uniform(iv.lo, iv.hi);
}
}  // namespace

XfmrGeometry sample_geometry(const ParamSpace& space, XfmrTemplate t, std::uint64_t seed) {
  if (auto err = space.validate_for(t); !err.empty())
    throw SampleError("invalid parameter space: " + err);
  Rng rng(mix_seed(seed, 0x67656f6dULL));
  std::string last_err;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    XfmrGeometry g;
    g.tmpl = t;
    auto [m, n] = space.turn_pairs[rng.index(space.turn_pairs.size())];
    g.turns_primary = m;
    g.turns_secondary = n;
    g.outer_dim_um = draw(rng, space.outer_dim_um);
    g.trace_width_um = draw(rng, space.trace_width_um);
    g.trace_spacing_um = draw(rng, space.trace_spacing_um);
    g.winding_gap_um = draw(rng, space.winding_gap_um);
    last_err = validate(g);
    if (last_err.empty()) return g;
  }
  throw SampleError("sample_geometry: 1000 retries exhausted, last violation: " + last_err);
}

std::string to_text_block(const XfmrGeometry& g) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "template=%s\n"
                "turns_primary=%d\n"
                "turns_secondary=%d\n"
                "outer_dim_um=%.17g\n"
                "trace_width_um=%.17g\n"
                "trace_spacing_um=%.17g\n"
                "winding_gap_um=%.17g\n",
                template_name(g.tmpl), g.turns_primary, g.turns_secondary, g.outer_dim_um,
                g.trace_width_um, g.trace_spacing_um, g.winding_gap_um);
  return buf;
}

XfmrGeometry from_text_block(const std::string& block) {
  std::map<std::string, std::string> kv;
  std::istringstream in(block);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("geometry block: bad line: " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error("geometry block: missing key " + k);
    return it->second;
  };
  XfmrGeometry g;
  auto t = template_from_name(need("template"));
  if (!t) throw std::runtime_error("geometry block: unknown template " + need("template"));
  g.tmpl = *t;
  long l = 0;
  double d = 0.0;
  if (!parse_long(need("turns_primary"), l)) throw std::runtime_error("bad turns_primary");
  g.turns_primary = static_cast<int>(l);
  if (!parse_long(need("turns_secondary"), l)) throw std::runtime_error("bad turns_secondary");
  g.turns_secondary = static_cast<int>(l);
  if (!parse_double(need("outer_dim_um"), d)) throw std::runtime_error("bad outer_dim_um");
  g.outer_dim_um = d;
  if (!parse_double(need("trace_width_um"), d)) throw std::runtime_error("bad trace_width_um");
  g.trace_width_um = d;
  if (!parse_double(need("trace_spacing_um"), d)) throw std::runtime_error("bad trace_spacing_um");
  g.trace_spacing_um = d;
  if (!parse_double(need("winding_gap_um"), d)) throw std::runtime_error("bad winding_gap_um");
  g.winding_gap_um = d;
  return g;
}

}  // namespace motif::geometry
