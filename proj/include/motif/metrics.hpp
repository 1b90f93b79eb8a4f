#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "motif/rfnet.hpp"

namespace motif::metrics {

struct MetricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// preds/labels: packed 12*K rows, one column per sample.

// Mean over samples and the 12 real channels of |pred - label| at index k.
double mae_freq(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels, int k_total, int k);

std::vector<double> mae_curve(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels,
                              int k_total);

// Mean of mae_freq over indices [0, k_max).
double mae_avg(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels, int k_total,
               int k_max);

// Per sample, mean |error| over grid points f <= min(2*SRF, f_max), then
// mean over samples.
double mae_avg_2srf(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels,
                    const rfnet::FrequencyGrid& grid, const std::vector<double>& srf_ghz);

// Pooled (grand) R^2 over all samples, channels, frequencies.
double r_squared(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels);

struct EvalReport {
  std::vector<double> mae_freq_curve;  // K values
  double mae_avg_full = 0.0;
  double mae_avg_2srf = 0.0;
  double r2 = 0.0;
  int sample_count = 0;
  std::vector<double> srf_ghz;  // per-sample, from the label tensors
};

EvalReport evaluate(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels,
                    const rfnet::FrequencyGrid& grid);

void write_csv(const EvalReport& r, const rfnet::FrequencyGrid& grid,
               const std::filesystem::path& path);
std::string summary_text(const EvalReport& r);

}  // namespace motif::metrics
