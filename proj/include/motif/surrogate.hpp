#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace motif::surrogate {

enum class Activation { Relu, Tanh };

const char* activation_name(Activation a);

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  Activation act = Activation::Relu;

  long param_count() const;
  bool operator==(const MlpSpec&) const = default;
};

struct Normalizer {
  Eigen::VectorXd in_mean, in_std;    // per input feature
  Eigen::VectorXd out_mean, out_std;  // per output component
  std::uint64_t provenance = 0;       // hash of the feature matrix it was fit on
};

// Samples are matrix columns throughout.
Normalizer fit_normalizer(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
std::uint64_t data_hash(const Eigen::MatrixXd& x);

struct MlpModel {
  MlpSpec spec;
  std::vector<Eigen::MatrixXd> w;  // w[l]: dims[l+1] x dims[l]
  std::vector<Eigen::VectorXd> b;
  Normalizer norm;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;
};

MlpModel init_mlp(const MlpSpec& spec, std::uint64_t seed);

// Per-channel RMSE over frequency averaged over the 12 real channels;
// vectors are channel-major with K_band points per channel.
double loss_freq(const Eigen::VectorXd& pred, const Eigen::VectorXd& label, int k_band);
double loss_freq_batch(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& label, int k_band);

struct Gradients {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
  double loss = 0.0;
};

Gradients gradients(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                    int k_band);

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int batch = 64;
  int epochs = 100;
  int patience = 20;  // validation epochs without improvement
  std::uint64_t seed = 0;
};

struct FitResult {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val = 0.0;
};

struct SurrogateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adam with seeded shuffling and early stopping on validation loss_freq;
// best-validation weights are kept and rounded to f32 (the checkpoint
// precision) so save/load reproduces forward outputs exactly.
// Requires m.norm fit on x_train (provenance check, leakage guard).
FitResult fit(MlpModel& m, const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
              const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& y_val, const TrainConfig& cfg,
              int k_band);

void round_weights_f32(MlpModel& m);

// .motifmodel: UTF-8 header, then raw little-endian f32 blob (per layer W
// row-major, then b).
void save_model(const MlpModel& m, const std::filesystem::path& path,
                const std::vector<std::pair<std::string, std::string>>& extra = {});
MlpModel load_model(const std::filesystem::path& path,
                    std::map<std::string, std::string>* extra = nullptr);

// Per-sub-band model of Algorithm-style schedules: band i of n covers
// ((i-1)*f_max/n, i*f_max/n].
struct SubBandModel {
  int band_index = 1;  // 1-based
  double f_lo_ghz = 0.0, f_hi_ghz = 0.0;
  int k_start = 0, k_count = 0;  // owned grid indices
  MlpModel model;
};

// Value-copies src weights into dst; dst output normalizer statistics are
// recomputed for dst's own band labels.
void init_from(SubBandModel& dst, const SubBandModel& src, const Eigen::MatrixXd& x_train,
               const Eigen::MatrixXd& y_train_band);

}  // namespace motif::surrogate
