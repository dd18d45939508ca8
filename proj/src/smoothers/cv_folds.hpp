#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cate/rng.hpp"

namespace cate::smoothers::detail {

// Order-insensitive fold labels: rows are ranked canonically (lexicographic
// by covariates, then response) before the seeded shuffle, so permuting the
// input rows cannot move them across folds.
inline std::vector<int> canonical_cv_folds(const Eigen::MatrixXd& x,
                                           const Eigen::VectorXd& resp,
                                           int folds, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return resp[a] < resp[b];
  });
  RngStream rng(seed, 0x5EEDF01D);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < order.size(); ++k)
    fold[static_cast<std::size_t>(order[k])] =
        static_cast<int>(k % static_cast<std::size_t>(folds));
  return fold;
}

}  // namespace cate::smoothers::detail
