#include "motif/inverse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "motif/oracle.hpp"
#include "motif/rng.hpp"
#include "motif/svg.hpp"
#include "motif/util.hpp"

namespace motif::inverse {

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

std::string validate_target(const MatchTarget& t, const rfnet::FrequencyGrid& grid) {
  if (!(t.z01.real() > 0.0)) return "Re(Z01) must be positive";
  if (!(t.z02.real() > 0.0)) return "Re(Z02) must be positive";
  if (!(t.bw_ghz > 0.0)) return "bandwidth must be positive";
  if (t.rho < 1) return "window index rho must be >= 1";
  if (!(t.fc_ghz - t.bw_ghz / 2.0 > grid.f_start_ghz)) return "band extends below the grid";
  if (!(t.fc_ghz + t.bw_ghz / 2.0 < grid.f_max_ghz())) return "band extends above the grid";
  return {};
}

double window(double f_ghz, const MatchTarget& t) {
  const double u = 2.0 * std::abs(f_ghz - t.fc_ghz) / t.bw_ghz;
  return std::exp(-kLn2 * std::pow(u, 2.0 * t.rho));
}

Backend ensemble_backend(const transfer::BandEnsemble& e) {
  return [&e](const geometry::XfmrGeometry& g) {
    const auto feat = geometry::feature_vector(g);
    Eigen::VectorXd x(geometry::kFeatureLen);
    for (int i = 0; i < geometry::kFeatureLen; ++i) x[i] = feat[i];
    const Eigen::VectorXd y = transfer::predict_full(e, x);
    return rfnet::unpack(
        std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), e.grid);
  };
}

Backend oracle_backend(const rfnet::FrequencyGrid& grid) {
  return [grid](const geometry::XfmrGeometry& g) {
    return oracle::solve_sparams(oracle::synthesize_lumped(g), grid);
  };
}

MatchCurves match_curves(const rfnet::SParamTensor& t, const MatchTarget& target, double c1_ff,
                         double c2_ff) {
  MatchCurves curves;
  const int kpts = t.grid.points;
  curves.gamma_mag.resize(kpts);
  curves.loss_mag.resize(kpts);
  const rfnet::ComplexPortSpec ports{target.z01, target.z02};
  for (int k = 0; k < kpts; ++k) {
    const double omega = 2.0 * 3.14159265358979323846 * t.grid.freq_ghz(k) * 1e9;
    Eigen::Matrix2cd zdd;
    bool ok = true;
    try {
      zdd = rfnet::dd_impedance(t, k);
      Eigen::Matrix2cd ydd = zdd.inverse();
      ydd(0, 0) += cd(0.0, omega * c1_ff * 1e-15);
      ydd(1, 1) += cd(0.0, omega * c2_ff * 1e-15);
      zdd = ydd.inverse();
      if (!zdd.allFinite()) ok = false;
    } catch (const rfnet::RfError&) {
      ok = false;
    }
    if (!ok) {  // degenerate point (possible for raw surrogate output)
      curves.gamma_mag[k] = 1.0;
      curves.loss_mag[k] = 0.0;
      continue;
    }
    try {
      curves.gamma_mag[k] = std::abs(rfnet::gamma_in_z(zdd, ports));
      curves.loss_mag[k] = rfnet::loss_mag_z(zdd, ports);
    } catch (const rfnet::RfError&) {
      curves.gamma_mag[k] = 1.0;
      curves.loss_mag[k] = 0.0;
    }
  }
  return curves;
}

double cost_js_from_tensor(const MatchCandidate& c, const MatchTarget& target,
                           const CostWeights& w, const rfnet::SParamTensor& t) {
  const auto curves = match_curves(t, target, c.c1_ff, c.c2_ff);
  double sum = 0.0;
  for (int k = 0; k < t.grid.points; ++k) {
    const double wf = window(t.grid.freq_ghz(k), target);
    // |L| clamped at 1 so the mismatch term stays nonnegative even for
    // non-passive surrogate predictions
    sum += wf * (w.w1 * curves.gamma_mag[k] + w.w2 * (1.0 - std::min(curves.loss_mag[k], 1.0)));
  }
  return w.w0 * geometry::area_mm2(c.geom) + sum;
}

double cost_js(const MatchCandidate& c, const MatchTarget& target, const CostWeights& w,
               const Backend& backend, const rfnet::FrequencyGrid& grid) {
  (void)grid;
  return cost_js_from_tensor(c, target, w, backend(c.geom));
}

CmaesResult cmaes_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                           const CmaesConfig& cfg, int workers) {
  const int n = static_cast<int>(cfg.lower.size());
  if (n < 1 || cfg.upper.size() != n) throw InverseError("cmaes: bad box bounds");
  for (int i = 0; i < n; ++i)
    if (!(cfg.lower[i] < cfg.upper[i])) throw InverseError("cmaes: empty box interval");
  if (!(cfg.sigma0 > 0.0 && cfg.sigma0 <= 1.0)) throw InverseError("cmaes: sigma0 out of (0,1]");

  const int lambda = cfg.lambda > 0 ? cfg.lambda
                                    : 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
  if (lambda < 4) throw InverseError("cmaes: lambda must be >= 4");
  const int mu = cfg.mu > 0 ? cfg.mu : lambda / 2;
  if (mu < 1 || mu > lambda / 2) throw InverseError("cmaes: mu out of [1, lambda/2]");

  // recombination weights (logarithmic)
  Eigen::VectorXd weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();

  const double cs = (mueff + 2.0) / (n + mueff + 5.0);
  const double ds =
      1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
  const double ccov_path = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
  const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
  const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) /
                                            ((n + 2.0) * (n + 2.0) + mueff));
  const double chi_n = std::sqrt(static_cast<double>(n)) *
                       (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  // search in box-normalized coordinates z in [0,1]^n
  const Eigen::VectorXd width = cfg.upper - cfg.lower;
  auto denorm = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    return cfg.lower.array() + z.array() * width.array();
  };
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(n, 0.5);
  if (cfg.x0) mean = ((*cfg.x0 - cfg.lower).array() / width.array()).matrix();
  double sigma = cfg.sigma0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd ps = Eigen::VectorXd::Zero(n), pc = Eigen::VectorXd::Zero(n);

  Rng rng(mix_seed(cfg.seed, 0x636d6165ULL));

  CmaesResult res;
  res.best_f = std::numeric_limits<double>::infinity();
  res.status = CmaesStatus::Budget;

  std::vector<Eigen::VectorXd> zs(lambda), ys(lambda);
  std::vector<double> fs(lambda);
  long evals = 0;

  while (evals < cfg.max_evals) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw InverseError("cmaes: eigendecomposition failed");
    const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
    const Eigen::MatrixXd& basis = eig.eigenvectors();
    const Eigen::MatrixXd bd = basis * d.asDiagonal();
    const Eigen::MatrixXd inv_sqrt_c =
        basis * d.cwiseInverse().asDiagonal() * basis.transpose();

    std::vector<double> penalties(lambda, 0.0);
    for (int i = 0; i < lambda; ++i) {
      Eigen::VectorXd y(n), z(n);
      bool feasible = false;
      for (int tries = 0; tries < 100 && !feasible; ++tries) {
        for (int j = 0; j < n; ++j) y[j] = rng.normal();
        y = bd * y;
        z = mean + sigma * y;
        feasible = (z.array() >= 0.0).all() && (z.array() <= 1.0).all();
      }
      if (!feasible) {
        const Eigen::VectorXd clipped = z.cwiseMax(0.0).cwiseMin(1.0);
        penalties[i] = 1e6 * (z - clipped).squaredNorm();
        z = clipped;
        y = (z - mean) / sigma;
      }
      zs[i] = z;
      ys[i] = y;
    }

    // fixed-order evaluation keeps runs reproducible under any worker count
    parallel_for(static_cast<std::size_t>(lambda), workers,
                 [&](std::size_t i) { fs[i] = objective(denorm(zs[i])) + penalties[i]; });
    evals += lambda;

    std::vector<int> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });

    if (fs[order[0]] < res.best_f) {
      res.best_f = fs[order[0]];
      res.best_x = denorm(zs[order[0]]);
    }
    res.history.push_back(res.best_f);

    if (cfg.target_cost && res.best_f <= *cfg.target_cost) {
      res.status = CmaesStatus::TargetReached;
      break;
    }

    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < mu; ++i) y_w += weights[i] * ys[order[i]];
    mean += sigma * y_w;

    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (inv_sqrt_c * y_w);
    const double gen = static_cast<double>(res.history.size());
    const bool hsig = ps.norm() / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * gen)) / chi_n <
                      1.4 + 2.0 / (n + 1.0);
    pc = (1.0 - ccov_path) * pc +
         (hsig ? std::sqrt(ccov_path * (2.0 - ccov_path) * mueff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) rank_mu += weights[i] * ys[order[i]] * ys[order[i]].transpose();
    const double hsig_corr = hsig ? 0.0 : c1 * ccov_path * (2.0 - ccov_path);
    cov = (1.0 - c1 - cmu + hsig_corr) * cov + c1 * (pc * pc.transpose()) + cmu * rank_mu;
    cov = 0.5 * (cov + cov.transpose());

    sigma *= std::exp((cs / ds) * (ps.norm() / chi_n - 1.0));
    sigma = std::min(sigma, 1.0);  // box-normalized space; keep steps sane
  }

  res.evals = evals;
  return res;
}

VerifyResult verify_with_oracle(const MatchCandidate& c, const MatchTarget& target,
                                const CostWeights& weights, const rfnet::FrequencyGrid& grid) {
  VerifyResult v;
  v.tensor = oracle::solve_sparams(oracle::synthesize_lumped(c.geom), grid);
  v.curves = match_curves(v.tensor, target, c.c1_ff, c.c2_ff);
  v.cost = cost_js_from_tensor(c, target, weights, v.tensor);
  return v;
}

namespace {

double db20(double mag) { return 20.0 * std::log10(std::max(mag, 1e-9)); }

}  // namespace

DesignReport inverse_design(const MatchTarget& target, const CostWeights& weights,
                            geometry::XfmrTemplate tmpl, int turns_m, int turns_n,
                            const transfer::BandEnsemble& ensemble,
                            const geometry::ParamSpace& box, CmaesConfig cfg, int workers) {
  const auto& grid = ensemble.grid;
  if (auto err = validate_target(target, grid); !err.empty())
    throw InverseError("inverse_design: " + err);

  const auto t0 = std::chrono::steady_clock::now();
  const Backend backend = ensemble_backend(ensemble);

  auto make_candidate = [&](const Eigen::VectorXd& v) {
    MatchCandidate c;
    c.geom.tmpl = tmpl;
    c.geom.turns_primary = turns_m;
    c.geom.turns_secondary = turns_n;
    c.geom.outer_dim_um = v[0];
    c.geom.trace_width_um = v[1];
    c.geom.trace_spacing_um = v[2];
    c.geom.winding_gap_um = v[3];
    c.c1_ff = v[4];
    c.c2_ff = v[5];
    return c;
  };

  auto objective = [&](const Eigen::VectorXd& v) {
    const MatchCandidate c = make_candidate(v);
    if (!geometry::is_valid(c.geom)) {
      // footprint violation: push back toward feasibility
      const double need =
          2.0 * c.geom.turns_primary * (c.geom.trace_width_um + c.geom.trace_spacing_um);
      return 1e6 + std::max(need - c.geom.outer_dim_um, 1.0);
    }
    return cost_js_from_tensor(c, target, weights, backend(c.geom));
  };

  if (cfg.lower.size() == 0) {
    cfg.lower.resize(6);
    cfg.upper.resize(6);
    cfg.lower << box.outer_dim_um.lo, box.trace_width_um.lo, box.trace_spacing_um.lo,
        box.winding_gap_um.lo, 0.0, 0.0;
    cfg.upper << box.outer_dim_um.hi, box.trace_width_um.hi, box.trace_spacing_um.hi,
        box.winding_gap_um.hi, kCMaxFf, kCMaxFf;
  }

  DesignReport r;
  r.target = target;
  r.weights = weights;

  // Each restart's winner gets one oracle verification; keep the best
  // oracle cost so a restart that merely exploited surrogate error loses.
  const int restarts = std::max(1, cfg.restarts);
  VerifyResult v;
  for (int rs = 0; rs < restarts; ++rs) {
    auto run_cfg = cfg;
    if (restarts > 1) run_cfg.seed = mix_seed(cfg.seed, 101 + rs);
    const CmaesResult opt = cmaes_minimize(objective, run_cfg, workers);
    r.evals += opt.evals;
    const MatchCandidate cand = make_candidate(opt.best_x);
    auto ver = verify_with_oracle(cand, target, weights, grid);
    if (rs == 0 || ver.cost < v.cost) {
      r.best = cand;
      r.history = opt.history;
      v = std::move(ver);
    }
  }
  r.surrogate_cost = cost_js_from_tensor(r.best, target, weights, backend(r.best.geom));
  r.surrogate_curves = match_curves(backend(r.best.geom), target, r.best.c1_ff, r.best.c2_ff);

  r.oracle_cost = v.cost;
  r.oracle_curves = v.curves;
  r.oracle_tensor = v.tensor;
  r.cost_gap_frac =
      std::abs(r.surrogate_cost - r.oracle_cost) / std::max(std::abs(r.oracle_cost), 1e-12);

  r.success = true;
  r.max_gamma_gap_db = 0.0;
  for (int k = 0; k < grid.points; ++k) {
    const double f = grid.freq_ghz(k);
    if (f < target.fc_ghz - target.bw_ghz / 2.0 - 1e-9 ||
        f > target.fc_ghz + target.bw_ghz / 2.0 + 1e-9)
      continue;
    if (db20(r.oracle_curves.gamma_mag[k]) >= kSuccessGammaDb) r.success = false;
    // floor both curves at -40 dB so deep nulls don't inflate the gap
    const double floor_lin = 1e-2;
    r.max_gamma_gap_db =
        std::max(r.max_gamma_gap_db,
                 std::abs(db20(std::max(r.oracle_curves.gamma_mag[k], floor_lin)) -
                          db20(std::max(r.surrogate_curves.gamma_mag[k], floor_lin))));
  }
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void write_report(const DesignReport& r, const rfnet::FrequencyGrid& grid,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.txt");
    if (!out) throw InverseError("write_report: cannot open report.txt");
    char buf[256];
    out << "MOTIF inverse design report\n\n";
    std::snprintf(buf, sizeof(buf), "target_z01=%.9g,%.9g\n", r.target.z01.real(),
                  r.target.z01.imag());
    out << buf;
    std::snprintf(buf, sizeof(buf), "target_z02=%.9g,%.9g\n", r.target.z02.real(),
                  r.target.z02.imag());
    out << buf;
    std::snprintf(buf, sizeof(buf), "fc_ghz=%.9g\nbw_ghz=%.9g\nrho=%d\n", r.target.fc_ghz,
                  r.target.bw_ghz, r.target.rho);
    out << buf;
    std::snprintf(buf, sizeof(buf), "weights=w0:%.9g w1:%.9g w2:%.9g\n\n", r.weights.w0,
                  r.weights.w1, r.weights.w2);
    out << buf;
    out << geometry::to_text_block(r.best.geom);
    std::snprintf(buf, sizeof(buf), "c1_ff=%.9g\nc2_ff=%.9g\n\n", r.best.c1_ff, r.best.c2_ff);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "surrogate_cost=%.9g\noracle_cost=%.9g\ncost_gap_frac=%.9g\n"
                  "max_inband_gamma_gap_db=%.9g\n",
                  r.surrogate_cost, r.oracle_cost, r.cost_gap_frac, r.max_gamma_gap_db);
    out << buf;
    std::snprintf(buf, sizeof(buf), "area_mm2=%.9g\nevaluations=%ld\nwall_seconds=%.3f\n",
                  geometry::area_mm2(r.best.geom), r.evals, r.wall_seconds);
    out << buf;
    out << "status=" << (r.success ? "success" : "no-feasible-design") << "\n";
  }
  {
    std::ofstream out(dir / "curves.csv");
    if (!out) throw InverseError("write_report: cannot open curves.csv");
    out << "f_ghz,gamma_db_surrogate,gamma_db_oracle,loss_db_surrogate,loss_db_oracle\n";
    char buf[200];
    for (int k = 0; k < grid.points; ++k) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g\n", grid.freq_ghz(k),
                    db20(r.surrogate_curves.gamma_mag[k]), db20(r.oracle_curves.gamma_mag[k]),
                    db20(r.surrogate_curves.loss_mag[k]), db20(r.oracle_curves.loss_mag[k]));
      out << buf;
    }
  }
  rfnet::touchstone_write(r.oracle_tensor, dir / "verified.s4p");

  std::vector<double> f(grid.points), gs(grid.points), go(grid.points), ls(grid.points),
      lo(grid.points);
  for (int k = 0; k < grid.points; ++k) {
    f[k] = grid.freq_ghz(k);
    gs[k] = db20(r.surrogate_curves.gamma_mag[k]);
    go[k] = db20(r.oracle_curves.gamma_mag[k]);
    ls[k] = db20(r.surrogate_curves.loss_mag[k]);
    lo[k] = db20(r.oracle_curves.loss_mag[k]);
  }
  svg::LinePlot gp("Input reflection", "frequency (GHz)", "|Gamma_in| (dB)");
  gp.add_series(f, gs, "surrogate", "#1f77b4");
  gp.add_series(f, go, "oracle", "#d62728");
  gp.write(dir / "gamma.svg");
  svg::LinePlot lp("Transducer loss", "frequency (GHz)", "|L| (dB)");
  lp.add_series(f, ls, "surrogate", "#1f77b4");
  lp.add_series(f, lo, "oracle", "#d62728");
  lp.write(dir / "loss.svg");
}

}  // namespace motif::inverse
