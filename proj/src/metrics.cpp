#include "motif/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace motif::metrics {

namespace {
void check_shapes(const Eigen::MatrixXd& p, const Eigen::MatrixXd& l, int k_total) {
  if (p.rows() != l.rows() || p.cols() != l.cols())
    throw MetricsError("metrics: prediction/label shape mismatch");
  if (p.rows() != 12L * k_total) throw MetricsError("metrics: rows != 12*K");
  if (p.cols() < 1) throw MetricsError("metrics: empty sample set");
}
}  // namespace

double mae_freq(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels, int k_total, int k) {
  check_shapes(preds, labels, k_total);
  if (k < 0 || k >= k_total) throw MetricsError("mae_freq: index out of range");
  double sum = 0.0;
  for (int n = 0; n < 12; ++n) {
    const Eigen::Index row = static_cast<Eigen::Index>(n) * k_total + k;
    sum += (preds.row(row) - labels.row(row)).cwiseAbs().mean();
  }
  return sum / 12.0;
}

std::vector<double> mae_curve(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels,
                              int k_total) {
  std::vector<double> c(k_total);
  for (int k = 0; k < k_total; ++k) c[k] = mae_freq(preds, labels, k_total, k);
  return c;
}

double mae_avg(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels, int k_total,
               int k_max) {
  if (k_max < 1 || k_max > k_total) throw MetricsError("mae_avg: k_max out of range");
  double sum = 0.0;
  for (int k = 0; k < k_max; ++k) sum += mae_freq(preds, labels, k_total, k);
  return sum / k_max;
}

double mae_avg_2srf(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels,
                    const rfnet::FrequencyGrid& grid, const std::vector<double>& srf_ghz) {
  const int k_total = grid.points;
  check_shapes(preds, labels, k_total);
  if (srf_ghz.size() != static_cast<std::size_t>(preds.cols()))
    throw MetricsError("mae_avg_2srf: SRF count mismatch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < preds.cols(); ++j) {
    const double f_cap = std::min(2.0 * srf_ghz[j], grid.f_max_ghz());
    int k_max = 0;
    while (k_max < k_total && grid.freq_ghz(k_max) <= f_cap) ++k_max;
    if (k_max < 1) k_max = 1;
    double s = 0.0;
    for (int n = 0; n < 12; ++n)
      s += (preds.col(j).segment(static_cast<Eigen::Index>(n) * k_total, k_max) -
            labels.col(j).segment(static_cast<Eigen::Index>(n) * k_total, k_max))
               .cwiseAbs()
               .sum();
    total += s / (12.0 * k_max);
  }
  return total / static_cast<double>(preds.cols());
}

double r_squared(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels) {
  if (preds.rows() != labels.rows() || preds.cols() != labels.cols())
    throw MetricsError("r_squared: shape mismatch");
  const double mean = labels.mean();
  const double ss_tot = (labels.array() - mean).square().sum();
  if (!(ss_tot > 0.0)) throw MetricsError("r_squared: zero label variance");
  const double ss_res = (preds - labels).array().square().sum();
  return 1.0 - ss_res / ss_tot;
}

EvalReport evaluate(const Eigen::MatrixXd& preds, const Eigen::MatrixXd& labels,
                    const rfnet::FrequencyGrid& grid) {
  EvalReport r;
  r.sample_count = static_cast<int>(preds.cols());
  r.mae_freq_curve = mae_curve(preds, labels, grid.points);
  r.mae_avg_full = mae_avg(preds, labels, grid.points, grid.points);
  r.srf_ghz.resize(preds.cols());
  for (Eigen::Index j = 0; j < labels.cols(); ++j) {
    const Eigen::VectorXd col = labels.col(j);
    const auto t = rfnet::unpack(std::span<const double>(col.data(),
                                                         static_cast<std::size_t>(col.size())),
                                 grid);
    r.srf_ghz[j] = rfnet::detect_srf(t).srf_ghz;
  }
  r.mae_avg_2srf = mae_avg_2srf(preds, labels, grid, r.srf_ghz);
  r.r2 = r_squared(preds, labels);
  return r;
}

void write_csv(const EvalReport& r, const rfnet::FrequencyGrid& grid,
               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MetricsError("write_csv: cannot open " + path.string());
  out << "f_ghz,mae_freq\n";
  char buf[64];
  for (std::size_t k = 0; k < r.mae_freq_curve.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", grid.freq_ghz(static_cast<int>(k)),
                  r.mae_freq_curve[k]);
    out << buf;
  }
}

std::string summary_text(const EvalReport& r) {
  std::ostringstream os;
  os << "samples=" << r.sample_count << "\n";
  os << "mae_avg_full=" << r.mae_avg_full << "\n";
  os << "mae_avg_2srf=" << r.mae_avg_2srf << "\n";
  os << "r_squared=" << r.r2 << "\n";
  return os.str();
}

}  // namespace motif::metrics
