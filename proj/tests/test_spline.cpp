#include <doctest.h>

#include <cmath>

#include "cate/errors.hpp"
#include "cate/rng.hpp"
#include "cate/smoothers.hpp"

using namespace cate;
using namespace cate::smoothers;

TEST_CASE("straight lines live in the penalty null space") {
  RngStream rng(200);
  const Eigen::Index n = 40;
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = rng.uniform(-2, 2);
    y[i] = 1.5 - 0.75 * x[i];
  }
  const auto f = smoothing_spline_fit(x, y);
  for (double q = -2.5; q <= 2.5; q += 0.25)
    CHECK(f.evaluate1(q) == doctest::Approx(1.5 - 0.75 * q).epsilon(1e-6));
}

TEST_CASE("shift equivariance") {
  RngStream rng(201);
  const Eigen::Index n = 80;
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = rng.uniform(0, 1);
    y[i] = std::sin(6 * x[i]) + rng.normal(0, 0.3);
  }
  const auto f = smoothing_spline_fit(x, y);
  const Eigen::VectorXd ys = y.array() + 4.25;
  const auto g = smoothing_spline_fit(x, ys);
  for (double q = 0.05; q <= 0.95; q += 0.09)
    CHECK(g.evaluate1(q) - f.evaluate1(q) ==
          doctest::Approx(4.25).epsilon(1e-8));
}

TEST_CASE("smoother weights: sum to one and reproduce the evaluation") {
  RngStream rng(202);
  const Eigen::Index n = 60;
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    y[i] = x[i] * x[i] + rng.normal(0, 0.1);
  }
  const auto f = smoothing_spline_fit(x, y);
  CHECK(f.has_weights());
  for (double q : {-0.8, -0.3, 0.0, 0.4, 0.9, 1.4}) {
    Eigen::VectorXd qq(1);
    qq << q;
    const Eigen::VectorXd w = f.weights_at(qq);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(w.dot(y) == doctest::Approx(f.evaluate(qq)).epsilon(1e-10));
  }
}

TEST_CASE("ties are pooled and few distinct abscissae are rejected") {
  Eigen::VectorXd x(6), y(6);
  x << 0, 0, 1, 1, 2, 3;  // 4 distinct values with ties
  y << 1, 3, 2, 2, 0, 5;
  const auto f = smoothing_spline_fit(x, y);
  CHECK(std::isfinite(f.evaluate1(0.5)));

  Eigen::VectorXd xs(5), ys(5);
  xs << 0, 0, 1, 1, 2;  // only 3 distinct
  ys << 1, 1, 2, 2, 3;
  CHECK_THROWS_AS(smoothing_spline_fit(xs, ys), ValidationError);
}

TEST_CASE("fitted curve tracks a smooth signal") {
  RngStream rng(203);
  const Eigen::Index n = 400;
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    y[i] = std::sin(3 * x[i]) + rng.normal(0, 0.15);
  }
  const auto f = smoothing_spline_fit(x, y);
  double worst = 0.0;
  for (double q = -0.9; q <= 0.9; q += 0.05)
    worst = std::max(worst, std::fabs(f.evaluate1(q) - std::sin(3 * q)));
  CHECK(worst < 0.12);
}

TEST_CASE("extrapolation is linear beyond the knots") {
  RngStream rng(204);
  const Eigen::Index n = 50;
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = rng.uniform(0, 1);
    y[i] = x[i] + rng.normal(0, 0.05);
  }
  const auto f = smoothing_spline_fit(x, y);
  const double g2 = f.evaluate1(2.0), g3 = f.evaluate1(3.0), g4 = f.evaluate1(4.0);
  CHECK(g3 - g2 == doctest::Approx(g4 - g3).epsilon(1e-9));
}
