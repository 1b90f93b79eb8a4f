#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "motif/geometry.hpp"
#include "motif/rfnet.hpp"
#include "motif/transfer.hpp"

namespace motif::inverse {

using cd = std::complex<double>;

struct InverseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MatchTarget {
  cd z01{50.0, 0.0};  // differential source reference
  cd z02{50.0, 0.0};  // differential load
  double fc_ghz = 45.0;
  double bw_ghz = 10.0;
  int rho = 1;  // window index, >= 1
};

std::string validate_target(const MatchTarget& t, const rfnet::FrequencyGrid& grid);

struct CostWeights {
  double w0 = 1.0;  // per mm^2
  double w1 = 1.0;  // |Gamma_in|
  double w2 = 1.0;  // 1 - |L|
};

constexpr double kCMaxFf = 500.0;

struct MatchCandidate {
  geometry::XfmrGeometry geom;
  double c1_ff = 0.0, c2_ff = 0.0;  // shunt caps across differential in/out
};

// Super-Gaussian: peak 1 at fc, 1/2 at fc +- bw/2, flatter passband as rho
// grows.
double window(double f_ghz, const MatchTarget& t);

using Backend = std::function<rfnet::SParamTensor(const geometry::XfmrGeometry&)>;

Backend ensemble_backend(const transfer::BandEnsemble& e);
Backend oracle_backend(const rfnet::FrequencyGrid& grid);

struct MatchCurves {
  std::vector<double> gamma_mag;  // |Gamma_in| per grid point, linear
  std::vector<double> loss_mag;   // |L| per grid point, linear
};

// Shunt capacitors folded into the differential 2-port (admittance jwC at
// each port) before Gamma_in / |L| extraction.
MatchCurves match_curves(const rfnet::SParamTensor& t, const MatchTarget& target, double c1_ff,
                         double c2_ff);

double cost_js_from_tensor(const MatchCandidate& c, const MatchTarget& target,
                           const CostWeights& w, const rfnet::SParamTensor& t);
double cost_js(const MatchCandidate& c, const MatchTarget& target, const CostWeights& w,
               const Backend& backend, const rfnet::FrequencyGrid& grid);

struct CmaesConfig {
  int lambda = 0;       // 0: 4 + floor(3 ln n)
  int mu = 0;           // 0: lambda / 2
  double sigma0 = 0.3;  // fraction of box width
  Eigen::VectorXd lower, upper;
  std::optional<Eigen::VectorXd> x0;  // default: box center
  long max_evals = 10000;
  std::uint64_t seed = 0;
  std::optional<double> target_cost;
  // inverse_design only: independent CMA runs; each winner is verified
  // against the oracle and the best oracle cost is kept. Guards against the
  // optimizer exploiting surrogate error at a single lucky point.
  int restarts = 1;
};

enum class CmaesStatus { TargetReached, Budget };

struct CmaesResult {
  Eigen::VectorXd best_x;
  double best_f = 0.0;
  std::vector<double> history;  // best-so-far per generation, nonincreasing
  long evals = 0;
  CmaesStatus status = CmaesStatus::Budget;
};

// (mu/mu_w, lambda)-CMA-ES with weighted recombination, rank-1 + rank-mu
// covariance update and cumulative step-size adaptation. Box handling:
// resample infeasible offspring up to 100 times, then coordinate clipping
// with a quadratic penalty. Deterministic per seed for any worker count.
CmaesResult cmaes_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                           const CmaesConfig& cfg, int workers = 1);

struct DesignReport {
  MatchTarget target;
  CostWeights weights;
  MatchCandidate best;
  double surrogate_cost = 0.0;
  double oracle_cost = 0.0;
  MatchCurves surrogate_curves, oracle_curves;
  rfnet::SParamTensor oracle_tensor;
  bool success = false;         // oracle-verified in-band |Gamma_in| < -10 dB
  double cost_gap_frac = 0.0;   // |surrogate - oracle| / oracle
  double max_gamma_gap_db = 0.0;  // worst in-band |Gamma| discrepancy
  long evals = 0;
  double wall_seconds = 0.0;
  std::vector<double> history;
};

constexpr double kSuccessGammaDb = -10.0;

// Optimizes (outer_dim, trace_width, trace_spacing, winding_gap, C1, C2)
// with template and (M, N) fixed; verifies the winner against the oracle.
DesignReport inverse_design(const MatchTarget& target, const CostWeights& weights,
                            geometry::XfmrTemplate tmpl, int turns_m, int turns_n,
                            const transfer::BandEnsemble& ensemble,
                            const geometry::ParamSpace& box, CmaesConfig cfg, int workers = 1);

struct VerifyResult {
  MatchCurves curves;
  double cost = 0.0;
  rfnet::SParamTensor tensor;
};

VerifyResult verify_with_oracle(const MatchCandidate& c, const MatchTarget& target,
                                const CostWeights& weights, const rfnet::FrequencyGrid& grid);

// report.txt + curves.csv + verified.s4p + gamma.svg/loss.svg
void write_report(const DesignReport& r, const rfnet::FrequencyGrid& grid,
                  const std::filesystem::path& dir);

}  // namespace motif::inverse
