#include <doctest.h>

#include <cmath>

#include "cate/dgp.hpp"

using namespace cate;

TEST_CASE("piecewise regression curve values and branch gaps") {
  CHECK(dgp::gyorfi_mu(-1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(dgp::gyorfi_mu(-0.25) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(dgp::gyorfi_mu(0.2) == doctest::Approx(1.075).epsilon(1e-15));
  // indicator gaps and the jump at -0.5 are part of the definition
  CHECK(dgp::gyorfi_mu(0.0) == 0.0);
  CHECK(dgp::gyorfi_mu(0.5) == 0.0);
  CHECK(dgp::gyorfi_mu(-0.5) == doctest::Approx(1.125));
  CHECK(dgp::gyorfi_mu(-0.499999) == doctest::Approx(0.625).epsilon(1e-4));
  CHECK(dgp::gyorfi_mu(0.75) == doctest::Approx(0.875));
}

TEST_CASE("piecewise sampler: truth handles and frequencies") {
  const auto s = dgp::sample_piecewise(100000, 42);
  CHECK(s.table.rows() == 100000);
  CHECK(s.table.dim() == 1);

  Eigen::VectorXd probe(1);
  probe << 0.3;
  CHECK(s.truth.tau(probe) == 0.0);
  probe << -0.9;
  CHECK(s.truth.tau(probe) == 0.0);
  CHECK(s.truth.pi(probe) == doctest::Approx(0.1));
  probe << 0.9;
  CHECK(s.truth.pi(probe) == doctest::Approx(0.9));

  CHECK(dgp::piecewise_noise_sd(0.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(dgp::piecewise_noise_sd(0.5) == doctest::Approx(0.3).epsilon(1e-15));

  std::size_t pos = 0, pos_treated = 0;
  for (Eigen::Index i = 0; i < s.table.rows(); ++i) {
    if (s.table.x(i, 0) > 0) {
      ++pos;
      if (s.table.a[i] == 1.0) ++pos_treated;
    }
  }
  const double frac = static_cast<double>(pos_treated) / pos;
  CHECK(frac == doctest::Approx(0.9).epsilon(0.012));

  const auto s2 = dgp::sample_piecewise(100000, 42);
  CHECK(s.table.x == s2.table.x);
  CHECK(s.table.a == s2.table.a);
  CHECK(s.table.y == s2.table.y);
}

TEST_CASE("rate-controlled propensity device") {
  Eigen::VectorXd pi(4);
  pi << 0.1, 0.9, 0.5, 0.25;
  // vanishing perturbation
  const auto nearly = dgp::rate_controlled_pihat(pi, 2000, 50.0, 7);
  CHECK((nearly - pi).cwiseAbs().maxCoeff() <= 1e-10);
  // determinism
  const auto a = dgp::rate_controlled_pihat(pi, 2000, 0.25, 7);
  const auto b = dgp::rate_controlled_pihat(pi, 2000, 0.25, 7);
  CHECK(a == b);
  CHECK(dgp::rate_controlled_pihat(pi, 2000, 0.25, 8) != a);

  // empirical RMSE against the first-order delta-method size
  const int m = 10000;
  Eigen::VectorXd big = Eigen::VectorXd::Constant(m, 0.0);
  for (int i = 0; i < m; ++i) big[i] = i % 2 ? 0.1 : 0.9;
  const auto hat = dgp::rate_controlled_pihat(big, 2000, 0.25, 11);
  double sq = 0.0;
  for (int i = 0; i < m; ++i) sq += (hat[i] - big[i]) * (hat[i] - big[i]);
  const double rmse = std::sqrt(sq / m);
  const double predicted = std::pow(2000.0, -0.25) * std::sqrt(2.0) * 0.09;
  CHECK(rmse == doctest::Approx(predicted).epsilon(0.30));
}

TEST_CASE("high-dimensional sampler") {
  const int d = 20, alpha = 4, beta = 6;
  const auto s = dgp::sample_highdim(100000, d, alpha, beta, 5);
  CHECK(s.table.dim() == d);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  CHECK(s.truth.pi(zero) == doctest::Approx(0.5));
  CHECK(s.truth.tau(zero) == 0.0);

  // pi(X) concentrates in [0.2, 0.8]
  std::size_t inside = 0;
  for (Eigen::Index i = 0; i < s.table.rows(); ++i) {
    const double p = s.truth.pi(s.table.x.row(i).transpose());
    if (p >= 0.2 && p <= 0.8) ++inside;
  }
  CHECK(static_cast<double>(inside) / s.table.rows() >= 0.95);

  // outcomes are binary and the effect is exactly zero
  for (Eigen::Index i = 0; i < 50; ++i) {
    CHECK((s.table.y[i] == 0.0 || s.table.y[i] == 1.0));
    CHECK(s.truth.mu0(s.table.x.row(i).transpose()) ==
          s.truth.mu1(s.table.x.row(i).transpose()));
  }
  const auto s2 = dgp::sample_highdim(100000, d, alpha, beta, 5);
  CHECK(s.table.y == s2.table.y);
}
