#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "motif/oracle.hpp"

namespace motif::data {

struct Split {
  std::vector<int> train, val, test;
};

// Seeded 80/10/10 shuffle split.
Split make_split(int n, std::uint64_t seed, double train_frac = 0.8, double val_frac = 0.1);

// Columns are samples: x is kFeatureLen x n, y is 12*K x n.
void to_matrices(const oracle::Dataset& ds, const std::vector<int>& idx, Eigen::MatrixXd& x,
                 Eigen::MatrixXd& y);

}  // namespace motif::data
