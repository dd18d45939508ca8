#pragma once

#include <Eigen/Dense>

namespace cate::smoothers::detail {

struct SpdSolveResult {
  Eigen::VectorXd theta;
  double min_eig = 0.0;
  double max_eig = 0.0;
  double condition = 0.0;
  bool ok = false;
  bool used_ridge = false;
};

//! Solve A theta = rhs for symmetric PSD A. A well-conditioned system is
//! solved as-is; past cond_limit a ridge of ridge_scale*trace(A)/p is added
//! and the condition rechecked. ok=false when the system stays unusable.
SpdSolveResult solve_spd_checked(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& rhs,
                                 double ridge_scale, double cond_limit);

//! Eigenvalue extremes of a symmetric matrix.
void sym_eig_range(const Eigen::MatrixXd& A, double* min_eig, double* max_eig);

}  // namespace cate::smoothers::detail
