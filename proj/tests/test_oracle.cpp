#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "motif/oracle.hpp"
#include "motif/rng.hpp"

using namespace motif;
using namespace motif::oracle;
using geometry::ParamSpace;
using geometry::XfmrGeometry;
using geometry::XfmrTemplate;
using rfnet::FrequencyGrid;

namespace {

XfmrGeometry make_geom(XfmrTemplate t, int m, int n, double d, double w, double s, double gap) {
  XfmrGeometry g;
  g.tmpl = t;
  g.turns_primary = m;
  g.turns_secondary = n;
  g.outer_dim_um = d;
  g.trace_width_um = w;
  g.trace_spacing_um = s;
  g.winding_gap_um = gap;
  return g;
}

}  // namespace

TEST_CASE("lumped synthesis hand-computed reference values") {
  // D=100, w=5, s=3, n=1: d_in=84, d_avg=92, rho=16/184, length=368
  auto g = make_geom(XfmrTemplate::OneToOne, 1, 1, 100.0, 5.0, 3.0, 2.0);
  auto m = synthesize_lumped(g);
  CHECK(m.l1_h == doctest::Approx(2.18322e-10).epsilon(1e-4));
  CHECK(m.l2_h == m.l1_h);
  CHECK(m.rdc1_ohm == doctest::Approx(0.422989).epsilon(1e-4));
  CHECK(m.k == doctest::Approx(0.9 * std::exp(-0.1)).epsilon(1e-12));
  CHECK(m.cox_f == doctest::Approx(110.4e-15).epsilon(1e-6));
  CHECK(m.cww_f == doctest::Approx(29.44e-15).epsilon(1e-6));
}

TEST_CASE("inductance grows with turn count at fixed outer dimension") {
  double prev = 0.0;
  for (int n = 1; n <= 4; ++n) {
    auto m = synthesize_lumped(make_geom(XfmrTemplate::MToN, n, 1, 300.0, 3.0, 3.0, 2.0));
    CHECK(m.l1_h > prev);
    prev = m.l1_h;
  }
}

TEST_CASE("inner opening clamp keeps oversized windings physical") {
  auto m = synthesize_lumped(make_geom(XfmrTemplate::MToN, 4, 4, 50.0, 10.0, 10.0, 2.0));
  CHECK(m.l1_h > 0.0);
  CHECK(std::isfinite(m.rdc1_ohm));
}

TEST_CASE("coupling: template base values, gap decay, clamp") {
  auto at_gap = [](XfmrTemplate t, double gap) {
    return synthesize_lumped(make_geom(t, 1, 1, 150.0, 4.0, 3.0, gap)).k;
  };
  CHECK(at_gap(XfmrTemplate::OneToOne, 0.0) == doctest::Approx(0.9));
  CHECK(at_gap(XfmrTemplate::MToN, 0.0) == doctest::Approx(0.9));
  CHECK(at_gap(XfmrTemplate::ParallelInductor, 0.0) == doctest::Approx(0.95));
  CHECK(at_gap(XfmrTemplate::EightShaped, 0.0) == doctest::Approx(0.72));
  // exponential decay with the 20um scale
  CHECK(at_gap(XfmrTemplate::MToN, 6.0) / at_gap(XfmrTemplate::MToN, 1.0) ==
        doctest::Approx(std::exp(-5.0 / 20.0)).epsilon(1e-12));
  // floor for absurd gaps
  CHECK(at_gap(XfmrTemplate::MToN, 500.0) == 1e-3);
}

TEST_CASE("solved spectra are passive and smooth") {
  FrequencyGrid grid{0.5, 0.5, 200};
  auto space = ParamSpace::defaults(XfmrTemplate::MToN);
  for (int i = 0; i < 20; ++i) {
    auto g = geometry::sample_geometry(space, XfmrTemplate::MToN, 4000 + i);
    auto t = solve_sparams(synthesize_lumped(g), grid);
    double max_sv = 0.0, max_jump = 0.0;
    for (int k = 0; k < grid.points; ++k) {
      auto s = rfnet::expand_full(t, k);
      max_sv = std::max(max_sv, s.jacobiSvd().singularValues()(0));
      if (k > 0)
        for (int c = 0; c < rfnet::kChannels; ++c)
          max_jump = std::max(max_jump, std::abs(t.at(c, k) - t.at(c, k - 1)));
    }
    CAPTURE(i);
    CHECK(max_sv <= 1.0 + 1e-6);
    CHECK(max_jump < 0.2);
  }
}

TEST_CASE("generate_dataset is deterministic and worker-count invariant") {
  FrequencyGrid grid{0.5, 0.5, 200};
  auto space = ParamSpace::defaults(XfmrTemplate::MToN);
  auto a = generate_dataset(space, XfmrTemplate::MToN, 24, grid, 123, 1);
  auto b = generate_dataset(space, XfmrTemplate::MToN, 24, grid, 123, 3);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.rejections == b.rejections);
  for (int i = 0; i < a.size(); ++i) CHECK(a.geometries[i] == b.geometries[i]);

  auto c = generate_dataset(space, XfmrTemplate::MToN, 24, grid, 124, 1);
  CHECK(a.features != c.features);
}

TEST_CASE("all retained samples clear the SRF floor") {
  FrequencyGrid grid{0.5, 0.5, 200};
  auto space = ParamSpace::defaults(XfmrTemplate::MToN);
  auto ds = generate_dataset(space, XfmrTemplate::MToN, 24, grid, 321, 1);
  for (int i = 0; i < ds.size(); ++i) {
    auto srf = rfnet::detect_srf(label_tensor(ds, i));
    if (srf.found) CHECK(srf.srf_ghz >= 0.15 * grid.f_max_ghz());
  }
}

TEST_CASE("labels match an independent re-solve of the stored geometry") {
  FrequencyGrid grid{0.5, 0.5, 200};
  auto space = ParamSpace::defaults(XfmrTemplate::ParallelInductor);
  auto ds = generate_dataset(space, XfmrTemplate::ParallelInductor, 6, grid, 9, 1);
  for (int i = 0; i < ds.size(); ++i) {
    auto packed = rfnet::pack(solve_sparams(synthesize_lumped(ds.geometries[i]), grid));
    const float* row = ds.label_row(i);
    for (std::size_t j = 0; j < packed.size(); ++j)
      CHECK(row[j] == static_cast<float>(packed[j]));
  }
}

TEST_CASE("hopeless parameter space aborts instead of looping") {
  // huge multi-turn windings: SRF far below 0.15 * f_max for every draw
  ParamSpace s;
  s.outer_dim_um = {295.0, 300.0};
  s.trace_width_um = {10.0, 12.0};
  s.trace_spacing_um = {8.0, 10.0};
  s.winding_gap_um = {1.0, 2.0};
  s.turn_pairs = {{4, 4}};
  FrequencyGrid grid{0.5, 0.5, 200};
  CHECK_THROWS_AS(generate_dataset(s, XfmrTemplate::MToN, 4, grid, 1, 1), OracleError);
}

TEST_CASE("dataset save / load round trip") {
  FrequencyGrid grid{1.0, 0.5, 60};
  auto space = ParamSpace::defaults(XfmrTemplate::EightShaped);
  auto ds = generate_dataset(space, XfmrTemplate::EightShaped, 8, grid, 55, 2);
  const auto path = std::filesystem::temp_directory_path() / "motif_ds.bin";
  save_dataset(ds, path);
  auto ds2 = load_dataset(path);
  CHECK(ds2.tmpl == ds.tmpl);
  CHECK(ds2.grid == ds.grid);
  CHECK(ds2.seed == ds.seed);
  CHECK(ds2.rejections == ds.rejections);
  CHECK(ds2.oracle_version == ds.oracle_version);
  CHECK(ds2.features == ds.features);
  CHECK(ds2.labels == ds.labels);
  for (int i = 0; i < ds.size(); ++i) CHECK(ds2.geometries[i] == ds.geometries[i]);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".manifest");
}

TEST_CASE("dataset load errors") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto bad = dir / "motif_bad.bin";
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOTMOTIF";
  }
  CHECK_THROWS_WITH_AS(load_dataset(bad), doctest::Contains("bad magic"), OracleError);
  std::filesystem::remove(bad);
  CHECK_THROWS_AS(load_dataset(dir / "motif_missing.bin"), OracleError);
}
