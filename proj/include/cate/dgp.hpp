#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "cate/data.hpp"
#include "cate/types.hpp"

namespace cate::dgp {

double expit(double v);
double logit(double p);

//! Piecewise polynomial regression curve used by the 1-d simulation design:
//!   0.5 (x+2)^2            for x <= -0.5
//!   x/2 + 0.875            for -0.5 < x < 0
//!   -5 (x-0.2)^2 + 1.075   for 0 < x < 0.5
//!   x + 0.125              for x > 0.5
//! and 0 where no branch applies (x = 0 and x = 0.5); the jump at -0.5 is
//! intentional.
double gyorfi_mu(double x);

//! Pointwise ground truth of a simulation design. Functions take a covariate
//! vector; all are total on the support and safe to share across threads.
struct Truth {
  using Fn = std::function<double(const XRef&)>;
  Fn pi;
  Fn mu0;
  Fn mu1;
  Fn eta;  // pi*mu1 + (1-pi)*mu0
  Fn tau;  // mu1 - mu0
};

struct DgpSample {
  ObservationTable table;
  Truth truth;
};

//! 1-d design: X ~ U[-1,1], pi(x) = 0.1 + 0.8*1(x>0), mu1 = mu0 = gyorfi_mu,
//! Y = mu_A(X) + N(0, (0.2 - 0.1 cos(2 pi X))^2). The effect is exactly zero.
//! Draw order: all X, then all A, then all noise.
DgpSample sample_piecewise(std::size_t n, std::uint64_t seed);
Truth piecewise_truth();
double piecewise_noise_sd(double x);

//! Propensity estimates with a controlled error rate:
//!   expit(logit(pi_i) + e_i),  e_i iid N(n^-alpha, n^-2alpha).
//! Output is not clipped here; clipping happens at use sites.
Eigen::VectorXd rate_controlled_pihat(const Eigen::VectorXd& true_pi,
                                      double n_for_rate, double alpha_rate,
                                      std::uint64_t seed);

//! High-dimensional design: X ~ N(0, I_d),
//!   logit pi(x)   = sum_{j<alpha} x_j / (2 sqrt(alpha)),
//!   logit mu_a(x) = sum_{j<beta}  x_j / sqrt(beta)   (same for both arms),
//! A ~ Bern(pi), Y ~ Bern(mu_A). The effect is exactly zero.
DgpSample sample_highdim(std::size_t n, int d, int alpha_sparsity,
                         int beta_sparsity, std::uint64_t seed);
Truth highdim_truth(int alpha_sparsity, int beta_sparsity);

}  // namespace cate::dgp
