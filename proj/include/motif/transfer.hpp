#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motif/rfnet.hpp"
#include "motif/surrogate.hpp"

namespace motif::transfer {

struct TransferSchedule {
  int n_band = 10;
  int t_iters = 1;
  surrogate::TrainConfig visit_cfg;  // per-visit epoch budget
};

struct BandRange {
  int band = 1;  // 1-based
  int k_start = 0, k_count = 0;
  double f_lo_ghz = 0.0, f_hi_ghz = 0.0;  // covers (f_lo, f_hi]
};

struct TransferError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Equal-width tiling; n_band must divide the grid point count.
std::vector<BandRange> partition(const rfnet::FrequencyGrid& grid, int n_band);

// Rows of the packed 12*K label matrix belonging to one band, channel-major
// within the band (12 * k_count rows).
Eigen::MatrixXd band_slice(const Eigen::MatrixXd& y_full, int k_total, const BandRange& band);

struct Visit {
  int t = 0;                 // 0 = bootstrap, else transfer iteration
  char direction = 'B';      // 'B' bootstrap, 'F' forward, 'R' backward
  int band = 1;
  double val_loss = 0.0;
};

struct BandEnsemble {
  rfnet::FrequencyGrid grid;
  TransferSchedule schedule;
  std::uint64_t seed = 0;
  std::uint64_t dataset_hash = 0;
  std::vector<surrogate::SubBandModel> models;  // band order
  std::vector<Visit> log;                       // one entry per training visit
};

struct TrainData {
  Eigen::MatrixXd x_train, y_train;  // full-band labels, 12*K rows
  Eigen::MatrixXd x_val, y_val;
};

// Bootstrap band 1, then T forward/backward warm-start sweeps. Optimizer
// state is reset at every visit. Visit count = 1 + 2*T*(n_band - 1).
BandEnsemble run_self_transfer(const TrainData& td, const rfnet::FrequencyGrid& grid,
                               const std::vector<int>& hidden, surrogate::Activation act,
                               const TransferSchedule& schedule, std::uint64_t seed);

Eigen::VectorXd predict_full(const BandEnsemble& e, const Eigen::VectorXd& x);
Eigen::MatrixXd predict_full_batch(const BandEnsemble& e, const Eigen::MatrixXd& x);

// Directory layout: band_XX.motifmodel per band + ensemble.manifest.
void save_ensemble(const BandEnsemble& e, const std::filesystem::path& dir);
BandEnsemble load_ensemble(const std::filesystem::path& dir);

}  // namespace motif::transfer
