#include "cate/dgp.hpp"

#include <cmath>

#include "cate/errors.hpp"
#include "cate/rng.hpp"

namespace cate::dgp {

double expit(double v) { return std::exp(v) / (1.0 + std::exp(v)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

double gyorfi_mu(double x) {
  double v = 0.0;
  if (x <= -0.5) v += 0.5 * (x + 2.0) * (x + 2.0);
  if (x > -0.5 && x < 0.0) v += x / 2.0 + 0.875;
  if (x > 0.0 && x < 0.5) v += -5.0 * (x - 0.2) * (x - 0.2) + 1.075;
  if (x > 0.5) v += x + 0.125;
  return v;
}

double piecewise_noise_sd(double x) {
  return 0.2 - 0.1 * std::cos(2.0 * M_PI * x);
}

namespace {

double piecewise_pi(double x) { return 0.1 + 0.8 * (x > 0.0 ? 1.0 : 0.0); }

}  // namespace

Truth piecewise_truth() {
  Truth t;
  t.pi = [](const XRef& x) {
    return piecewise_pi(x[0]);
  };
  t.mu0 = [](const XRef& x) {
    return gyorfi_mu(x[0]);
  };
  t.mu1 = t.mu0;
  t.eta = t.mu0;  // mu1 == mu0
  t.tau = [](const XRef&) { return 0.0; };
  return t;
}

DgpSample sample_piecewise(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("n must be >= 1");
  RngStream rng(seed);
  const Eigen::Index ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x(ni, 1);
  for (Eigen::Index i = 0; i < ni; ++i) x(i, 0) = rng.uniform(-1.0, 1.0);
  Eigen::VectorXd a(ni);
  for (Eigen::Index i = 0; i < ni; ++i)
    a[i] = rng.bernoulli(piecewise_pi(x(i, 0))) ? 1.0 : 0.0;
  Eigen::VectorXd y(ni);
  for (Eigen::Index i = 0; i < ni; ++i)
    y[i] = gyorfi_mu(x(i, 0)) + rng.normal(0.0, piecewise_noise_sd(x(i, 0)));
  return DgpSample{
      ObservationTable::create(std::move(x), std::move(a), std::move(y)),
      piecewise_truth()};
}

Eigen::VectorXd rate_controlled_pihat(const Eigen::VectorXd& true_pi,
                                      double n_for_rate, double alpha_rate,
                                      std::uint64_t seed) {
  if (n_for_rate <= 0.0 || alpha_rate <= 0.0)
    throw ValidationError("rate-controlled propensity needs n > 0, alpha > 0");
  const double m = std::pow(n_for_rate, -alpha_rate);
  RngStream rng(seed);
  Eigen::VectorXd out(true_pi.size());
  for (Eigen::Index i = 0; i < true_pi.size(); ++i)
    out[i] = expit(logit(true_pi[i]) + rng.normal(m, m));
  return out;
}

Truth highdim_truth(int alpha_sparsity, int beta_sparsity) {
  const double ca = 1.0 / (2.0 * std::sqrt(static_cast<double>(alpha_sparsity)));
  const double cb = 1.0 / std::sqrt(static_cast<double>(beta_sparsity));
  Truth t;
  t.pi = [alpha_sparsity, ca](const XRef& x) {
    return expit(ca * x.head(alpha_sparsity).sum());
  };
  t.mu0 = [beta_sparsity, cb](const XRef& x) {
    return expit(cb * x.head(beta_sparsity).sum());
  };
  t.mu1 = t.mu0;
  t.eta = t.mu0;
  t.tau = [](const XRef&) { return 0.0; };
  return t;
}

DgpSample sample_highdim(std::size_t n, int d, int alpha_sparsity,
                         int beta_sparsity, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ValidationError("n and d must be >= 1");
  if (alpha_sparsity < 1 || alpha_sparsity > d || beta_sparsity < 1 ||
      beta_sparsity > d)
    throw ValidationError("sparsities must lie in [1, d]");
  RngStream rng(seed);
  const Eigen::Index ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x(ni, d);
  for (Eigen::Index i = 0; i < ni; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  Truth truth = highdim_truth(alpha_sparsity, beta_sparsity);
  Eigen::VectorXd a(ni);
  for (Eigen::Index i = 0; i < ni; ++i)
    a[i] = rng.bernoulli(truth.pi(x.row(i).transpose())) ? 1.0 : 0.0;
  Eigen::VectorXd y(ni);
  for (Eigen::Index i = 0; i < ni; ++i)
    y[i] = rng.bernoulli(truth.mu0(x.row(i).transpose())) ? 1.0 : 0.0;
  return DgpSample{
      ObservationTable::create(std::move(x), std::move(a), std::move(y)),
      std::move(truth)};
}

}  // namespace cate::dgp
