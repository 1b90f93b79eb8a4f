#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "motif/rng.hpp"
#include "motif/surrogate.hpp"

using namespace motif;
using namespace motif::surrogate;

namespace {

// y = smooth function of x, learnable by a tiny net
void toy_problem(int n, std::uint64_t seed, int k_band, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  Rng rng(seed);
  const int out = 12 * k_band;
  x.resize(3, n);
  y.resize(out, n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < 3; ++r) x(r, i) = rng.uniform(-1, 1);
    for (int r = 0; r < out; ++r)
      y(r, i) = 0.3 * std::sin(x(0, i) + 0.1 * r) + 0.2 * x(1, i) * x(2, i);
  }
}

MlpModel toy_model(int k_band, std::uint64_t seed, const Eigen::MatrixXd& x,
                   const Eigen::MatrixXd& y, Activation act = Activation::Tanh) {
  MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden = {32};
  spec.output_dim = 12 * k_band;
  spec.act = act;
  auto m = init_mlp(spec, seed);
  m.norm = fit_normalizer(x, y);
  return m;
}

}  // namespace

TEST_CASE("param_count formula") {
  MlpSpec s;
  s.input_dim = 6;
  s.hidden = {256, 256, 256};
  s.output_dim = 240;
  CHECK(s.param_count() == (6 * 256 + 256) + 2 * (256 * 256 + 256) + (256 * 240 + 240));
}

TEST_CASE("init_mlp is seed-deterministic with correct shapes") {
  MlpSpec s;
  s.input_dim = 4;
  s.hidden = {8, 5};
  s.output_dim = 12;
  auto a = init_mlp(s, 7);
  auto b = init_mlp(s, 7);
  auto c = init_mlp(s, 8);
  REQUIRE(a.w.size() == 3);
  CHECK(a.w[0].rows() == 8);
  CHECK(a.w[0].cols() == 4);
  CHECK(a.w[1].rows() == 5);
  CHECK(a.w[2].rows() == 12);
  for (std::size_t l = 0; l < a.w.size(); ++l) CHECK(a.w[l] == b.w[l]);
  CHECK(a.w[0] != c.w[0]);
}

TEST_CASE("loss_freq hand value: one channel in error") {
  const int k_band = 2;
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(24), label = Eigen::VectorXd::Zero(24);
  pred(0) = 3.0;  // channel 0, point 0
  pred(1) = 4.0;  // channel 0, point 1
  // L = (1/12) * sqrt((9 + 16) / 2)
  CHECK(loss_freq(pred, label, k_band) == doctest::Approx(std::sqrt(12.5) / 12.0).epsilon(1e-12));

  // uniform error e on every entry gives exactly |e|
  pred.setConstant(0.25);
  CHECK(loss_freq(pred, label, k_band) == doctest::Approx(0.25).epsilon(1e-12));

  // batch version is the mean over columns
  Eigen::MatrixXd p(24, 2), l = Eigen::MatrixXd::Zero(24, 2);
  p.col(0).setConstant(0.1);
  p.col(1).setConstant(0.3);
  CHECK(loss_freq_batch(p, l, k_band) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  const int k_band = 2;
  Eigen::MatrixXd x, y;
  toy_problem(5, 11, k_band, x, y);
  auto m = toy_model(k_band, 3, x, y);

  auto g = gradients(m, x, y, k_band);
  const double h = 1e-6;
  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int l = static_cast<int>(rng.index(m.w.size()));
    const bool bias = rng.uniform() < 0.3;
    if (bias) {
      const int r = static_cast<int>(rng.index(m.b[l].size()));
      auto mp = m, mm = m;
      mp.b[l](r) += h;
      mm.b[l](r) -= h;
      const double num = (gradients(mp, x, y, k_band).loss - gradients(mm, x, y, k_band).loss) /
                         (2.0 * h);
      CHECK(g.db[l](r) == doctest::Approx(num).epsilon(1e-4));
    } else {
      const int r = static_cast<int>(rng.index(m.w[l].rows()));
      const int c = static_cast<int>(rng.index(m.w[l].cols()));
      auto mp = m, mm = m;
      mp.w[l](r, c) += h;
      mm.w[l](r, c) -= h;
      const double num = (gradients(mp, x, y, k_band).loss - gradients(mm, x, y, k_band).loss) /
                         (2.0 * h);
      CHECK(g.dw[l](r, c) == doctest::Approx(num).epsilon(1e-4));
    }
  }
}

TEST_CASE("gradient is zero at exact fit (subgradient convention)") {
  const int k_band = 1;
  Eigen::MatrixXd x, y;
  toy_problem(4, 5, k_band, x, y);
  auto m = toy_model(k_band, 9, x, y);
  Eigen::MatrixXd y_exact = m.forward_batch(x);
  auto g = gradients(m, x, y_exact, k_band);
  CHECK(g.loss == 0.0);
  for (auto& dw : g.dw) CHECK(dw.cwiseAbs().maxCoeff() == 0.0);
  for (auto& db : g.db) CHECK(db.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit learns a toy mapping and is deterministic") {
  const int k_band = 1;
  Eigen::MatrixXd x, y, xv, yv;
  toy_problem(256, 21, k_band, x, y);
  toy_problem(64, 22, k_band, xv, yv);
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.patience = 150;
  cfg.seed = 1;

  auto m = toy_model(k_band, 2, x, y);
  const double before = loss_freq_batch(m.forward_batch(xv), yv, k_band);
  auto res = fit(m, x, y, xv, yv, cfg, k_band);
  const double after = loss_freq_batch(m.forward_batch(xv), yv, k_band);
  CHECK(after < 0.3 * before);
  CHECK(res.best_val == doctest::Approx(after).epsilon(1e-6));
  CHECK(static_cast<int>(res.train_loss.size()) <= cfg.epochs);

  auto m2 = toy_model(k_band, 2, x, y);
  fit(m2, x, y, xv, yv, cfg, k_band);
  for (std::size_t l = 0; l < m.w.size(); ++l) CHECK(m.w[l] == m2.w[l]);
}

TEST_CASE("early stopping halts after patience exhausts") {
  const int k_band = 1;
  Eigen::MatrixXd x, y, xv, yv;
  toy_problem(64, 31, k_band, x, y);
  // unlearnable validation labels: pure noise
  Rng rng(8);
  xv.resize(3, 32);
  yv.resize(12, 32);
  for (int i = 0; i < 32; ++i) {
    for (int r = 0; r < 3; ++r) xv(r, i) = rng.uniform(-1, 1);
    for (int r = 0; r < 12; ++r) yv(r, i) = rng.normal() * 10.0;
  }
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.patience = 5;
  auto m = toy_model(k_band, 2, x, y);
  auto res = fit(m, x, y, xv, yv, cfg, k_band);
  CHECK(static_cast<int>(res.val_loss.size()) < 500);
  CHECK(res.best_epoch <= static_cast<int>(res.val_loss.size()) - 1);
}

TEST_CASE("zero epochs leaves the model untouched") {
  const int k_band = 1;
  Eigen::MatrixXd x, y;
  toy_problem(16, 3, k_band, x, y);
  auto m = toy_model(k_band, 4, x, y);
  auto w0 = m.w;
  TrainConfig cfg;
  cfg.epochs = 0;
  auto res = fit(m, x, y, x, y, cfg, k_band);
  CHECK(res.train_loss.empty());
  for (std::size_t l = 0; l < m.w.size(); ++l) CHECK(m.w[l] == w0[l]);
}

TEST_CASE("normalizer provenance guards against fitting stats on other data") {
  const int k_band = 1;
  Eigen::MatrixXd x, y, x2, y2;
  toy_problem(16, 3, k_band, x, y);
  toy_problem(16, 4, k_band, x2, y2);
  auto m = toy_model(k_band, 4, x2, y2);  // stats from the wrong matrix
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_WITH_AS(fit(m, x, y, x, y, cfg, k_band), doctest::Contains("normalizer"),
                       SurrogateError);
  CHECK(data_hash(x) != data_hash(x2));
}

TEST_CASE("oversized learning rate reports divergence honestly") {
  const int k_band = 1;
  Eigen::MatrixXd x, y;
  toy_problem(32, 6, k_band, x, y);
  auto m = toy_model(k_band, 4, x, y, Activation::Relu);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 1e200;
  CHECK_THROWS_WITH_AS(fit(m, x, y, x, y, cfg, k_band), doctest::Contains("diverged"),
                       SurrogateError);
}

TEST_CASE("checkpoint round trip reproduces forward outputs bit-exactly") {
  const int k_band = 2;
  Eigen::MatrixXd x, y, xv, yv;
  toy_problem(128, 51, k_band, x, y);
  toy_problem(32, 52, k_band, xv, yv);
  auto m = toy_model(k_band, 5, x, y);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.patience = 10;
  fit(m, x, y, xv, yv, cfg, k_band);

  const auto path = std::filesystem::temp_directory_path() / "motif_model.motifmodel";
  save_model(m, path, {{"band_index", "3"}, {"note", "unit test"}});
  std::map<std::string, std::string> extra;
  auto m2 = load_model(path, &extra);
  CHECK(extra.at("band_index") == "3");
  CHECK(extra.at("note") == "unit test");
  CHECK(m2.spec == m.spec);
  CHECK(m2.norm.provenance == m.norm.provenance);
  Rng rng(60);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(3);
    for (int r = 0; r < 3; ++r) v(r) = rng.uniform(-2, 2);
    Eigen::VectorXd a = m.forward(v), b = m2.forward(v);
    for (int r = 0; r < a.size(); ++r) CHECK(a(r) == b(r));
  }
  std::filesystem::remove(path);
}

TEST_CASE("round_weights_f32 is idempotent") {
  const int k_band = 1;
  Eigen::MatrixXd x, y;
  toy_problem(8, 3, k_band, x, y);
  auto m = toy_model(k_band, 4, x, y);
  round_weights_f32(m);
  auto w1 = m.w;
  round_weights_f32(m);
  for (std::size_t l = 0; l < m.w.size(); ++l) CHECK(m.w[l] == w1[l]);
}

TEST_CASE("init_from copies weights and refits output stats on the new band") {
  const int k_band = 1;
  Eigen::MatrixXd x, y_src, y_dst;
  toy_problem(32, 71, k_band, x, y_src);
  y_dst = 5.0 * y_src;
  y_dst.array() += 2.0;

  SubBandModel src, dst;
  src.band_index = 1;
  src.model = toy_model(k_band, 6, x, y_src);
  dst.band_index = 2;
  dst.model = init_mlp(src.model.spec, 99);

  init_from(dst, src, x, y_dst);
  for (std::size_t l = 0; l < src.model.w.size(); ++l)
    CHECK(dst.model.w[l] == src.model.w[l]);
  CHECK(dst.model.norm.in_mean == src.model.norm.in_mean);
  CHECK(dst.model.norm.out_mean != src.model.norm.out_mean);
  auto fresh = fit_normalizer(x, y_dst);
  CHECK((dst.model.norm.out_mean - fresh.out_mean).cwiseAbs().maxCoeff() < 1e-12);
}
