#include "motif/data.hpp"

#include <numeric>

#include "motif/rng.hpp"

namespace motif::data {

Split make_split(int n, std::uint64_t seed, double train_frac, double val_frac) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x73706c6974ULL));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.index(static_cast<std::size_t>(i + 1))]);
  const int n_train = static_cast<int>(train_frac * n);
  const int n_val = static_cast<int>(val_frac * n);
  Split s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

void to_matrices(const oracle::Dataset& ds, const std::vector<int>& idx, Eigen::MatrixXd& x,
                 Eigen::MatrixXd& y) {
  const int flen = geometry::kFeatureLen;
  const int llen = ds.label_len();
  x.resize(flen, static_cast<Eigen::Index>(idx.size()));
  y.resize(llen, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const float* f = ds.feature_row(idx[j]);
    const float* l = ds.label_row(idx[j]);
    for (int i = 0; i < flen; ++i) x(i, static_cast<Eigen::Index>(j)) = f[i];
    for (int i = 0; i < llen; ++i) y(i, static_cast<Eigen::Index>(j)) = l[i];
  }
}

}  // namespace motif::data
