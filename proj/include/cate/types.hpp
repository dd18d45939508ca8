#pragma once

#include <Eigen/Dense>

namespace cate {

//! Read-only covariate vector argument. The inner stride lets callers pass
//! matrix rows (x.row(i).transpose()) without copying.
using XRef = Eigen::Ref<const Eigen::VectorXd, 0, Eigen::InnerStride<>>;

}  // namespace cate
