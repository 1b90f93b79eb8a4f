#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "motif/data.hpp"
#include "motif/transfer.hpp"

using namespace motif;
using namespace motif::transfer;
using rfnet::FrequencyGrid;

namespace {

// small but real training problem: 1to1 template, short grid
TrainData small_problem(FrequencyGrid grid, int n, std::uint64_t seed) {
  auto space = geometry::ParamSpace::defaults(geometry::XfmrTemplate::OneToOne);
  auto ds = oracle::generate_dataset(space, geometry::XfmrTemplate::OneToOne, n, grid, seed, 1);
  auto split = data::make_split(ds.size(), seed + 1);
  TrainData td;
  data::to_matrices(ds, split.train, td.x_train, td.y_train);
  data::to_matrices(ds, split.val, td.x_val, td.y_val);
  return td;
}

}  // namespace

TEST_CASE("make_split sizes, disjointness, determinism") {
  auto s = data::make_split(100, 4);
  CHECK(s.train.size() == 80);
  CHECK(s.val.size() == 10);
  CHECK(s.test.size() == 10);
  std::vector<bool> seen(100, false);
  for (auto v : {&s.train, &s.val, &s.test})
    for (int i : *v) {
      CHECK(!seen[i]);
      seen[i] = true;
    }
  for (bool b : seen) CHECK(b);
  auto s2 = data::make_split(100, 4);
  CHECK(s2.train == s.train);
  auto s3 = data::make_split(100, 5);
  CHECK(s3.train != s.train);
  // shuffled, not the identity order
  CHECK(!std::is_sorted(s.train.begin(), s.train.end()));
}

TEST_CASE("partition tiles the grid exactly") {
  FrequencyGrid grid{0.5, 0.5, 200};
  auto bands = partition(grid, 10);
  REQUIRE(bands.size() == 10);
  int k = 0;
  for (int i = 0; i < 10; ++i) {
    CHECK(bands[i].band == i + 1);
    CHECK(bands[i].k_start == k);
    CHECK(bands[i].k_count == 20);
    k += 20;
    CHECK(bands[i].f_lo_ghz == doctest::Approx(10.0 * i));
    CHECK(bands[i].f_hi_ghz == doctest::Approx(10.0 * (i + 1)));
  }
  // every grid point lands in the band whose (f_lo, f_hi] contains it
  for (int j = 0; j < grid.points; ++j) {
    const double f = grid.freq_ghz(j);
    for (auto& b : bands)
      if (j >= b.k_start && j < b.k_start + b.k_count) {
        CHECK(f > b.f_lo_ghz);
        CHECK(f <= b.f_hi_ghz + 1e-12);
      }
  }
}

TEST_CASE("partition rejects non-divisible configurations naming both numbers") {
  FrequencyGrid grid{0.5, 0.5, 200};
  CHECK_THROWS_WITH_AS(partition(grid, 7), doctest::Contains("200"), TransferError);
  CHECK_THROWS_WITH_AS(partition(grid, 7), doctest::Contains("7"), TransferError);
  CHECK_THROWS_AS(partition(grid, 0), TransferError);
}

TEST_CASE("band_slice picks the right rows, channel-major") {
  const int k_total = 4;
  Eigen::MatrixXd y(12 * k_total, 2);
  for (int r = 0; r < y.rows(); ++r) {
    y(r, 0) = r;
    y(r, 1) = 1000 + r;
  }
  BandRange b;
  b.band = 2;
  b.k_start = 2;
  b.k_count = 2;
  auto s = band_slice(y, k_total, b);
  REQUIRE(s.rows() == 24);
  REQUIRE(s.cols() == 2);
  for (int c = 0; c < 12; ++c)
    for (int j = 0; j < 2; ++j) {
      CHECK(s(c * 2 + j, 0) == c * k_total + b.k_start + j);
      CHECK(s(c * 2 + j, 1) == 1000 + c * k_total + b.k_start + j);
    }
}

TEST_CASE("self-transfer visit schedule, determinism, round trip") {
  FrequencyGrid grid{0.5, 0.5, 20};
  auto td = small_problem(grid, 60, 7);

  TransferSchedule sched;
  sched.n_band = 4;
  sched.t_iters = 1;
  sched.visit_cfg.epochs = 8;
  sched.visit_cfg.patience = 8;
  sched.visit_cfg.batch = 16;

  auto e = run_self_transfer(td, grid, {24, 24}, surrogate::Activation::Relu, sched, 11);

  // visit log: B1, then F2 F3 F4, then R3 R2 R1
  REQUIRE(e.log.size() == 1 + 2 * 1 * (4 - 1));
  CHECK(e.log[0].direction == 'B');
  CHECK(e.log[0].band == 1);
  const int expect_band[] = {1, 2, 3, 4, 3, 2, 1};
  const char expect_dir[] = {'B', 'F', 'F', 'F', 'R', 'R', 'R'};
  for (std::size_t i = 0; i < e.log.size(); ++i) {
    CHECK(e.log[i].band == expect_band[i]);
    CHECK(e.log[i].direction == expect_dir[i]);
  }
  REQUIRE(e.models.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(e.models[i].band_index == i + 1);
    CHECK(e.models[i].k_count == 5);
    CHECK(e.models[i].model.spec.output_dim == 12 * 5);
  }

  // deterministic
  auto e2 = run_self_transfer(td, grid, {24, 24}, surrogate::Activation::Relu, sched, 11);
  for (int i = 0; i < 4; ++i)
    for (std::size_t l = 0; l < e.models[i].model.w.size(); ++l)
      CHECK(e.models[i].model.w[l] == e2.models[i].model.w[l]);

  // prediction assembles all bands
  Eigen::VectorXd p = predict_full(e, td.x_val.col(0));
  REQUIRE(p.size() == 12 * 20);
  Eigen::MatrixXd pb = predict_full_batch(e, td.x_val);
  CHECK((pb.col(0) - p).cwiseAbs().maxCoeff() == 0.0);

  // warm start must help: the ensemble beats an untrained one on validation
  const double err = (pb - td.y_val).cwiseAbs().mean();
  CHECK(err < 0.5);

  // save / load reproduces predictions bit-exactly
  const auto dir = std::filesystem::temp_directory_path() / "motif_ensemble";
  std::filesystem::remove_all(dir);
  save_ensemble(e, dir);
  auto e3 = load_ensemble(dir);
  CHECK(e3.grid == e.grid);
  CHECK(e3.seed == e.seed);
  CHECK(e3.schedule.n_band == e.schedule.n_band);
  CHECK(e3.schedule.t_iters == e.schedule.t_iters);
  CHECK(e3.dataset_hash == e.dataset_hash);
  REQUIRE(e3.log.size() == e.log.size());
  for (std::size_t i = 0; i < e.log.size(); ++i) {
    CHECK(e3.log[i].band == e.log[i].band);
    CHECK(e3.log[i].direction == e.log[i].direction);
    CHECK(e3.log[i].t == e.log[i].t);
  }
  Eigen::VectorXd p3 = predict_full(e3, td.x_val.col(0));
  for (int r = 0; r < p.size(); ++r) CHECK(p3(r) == p(r));
  std::filesystem::remove_all(dir);
}

TEST_CASE("t_iters = 2 doubles the sweep count") {
  FrequencyGrid grid{0.5, 0.5, 10};
  auto td = small_problem(grid, 30, 19);
  TransferSchedule sched;
  sched.n_band = 2;
  sched.t_iters = 2;
  sched.visit_cfg.epochs = 2;
  sched.visit_cfg.patience = 2;
  sched.visit_cfg.batch = 8;
  auto e = run_self_transfer(td, grid, {16}, surrogate::Activation::Relu, sched, 3);
  REQUIRE(e.log.size() == 1 + 2 * 2 * (2 - 1));
  const int expect_band[] = {1, 2, 1, 2, 1};
  const int expect_t[] = {0, 1, 1, 2, 2};
  for (std::size_t i = 0; i < e.log.size(); ++i) {
    CHECK(e.log[i].band == expect_band[i]);
    CHECK(e.log[i].t == expect_t[i]);
  }
}
