#include <doctest.h>

#include <cmath>

#include "cate/errors.hpp"
#include "cate/rng.hpp"
#include "cate/smoothers.hpp"

using namespace cate;
using namespace cate::smoothers;

namespace {

Eigen::MatrixXd uniform_design(Eigen::Index n, RngStream& rng, double lo = -1,
                               double hi = 1) {
  Eigen::MatrixXd x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = rng.uniform(lo, hi);
  return x;
}

}  // namespace

TEST_CASE("basis layout") {
  const auto b1 = PolyBasis::total_degree(1, 2);
  CHECK(b1.p() == 3);
  const auto b2 = PolyBasis::total_degree(2, 2);
  CHECK(b2.p() == 6);  // C(4,2)
  const auto b3 = PolyBasis::total_degree(3, 1);
  CHECK(b3.p() == 4);
  // constant first: b(0) = e_1
  Eigen::VectorXd u = Eigen::VectorXd::Zero(2), out(6);
  b2.eval(u, out);
  CHECK(out[0] == 1.0);
  CHECK(out.tail(5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constants and polynomials are reproduced") {
  RngStream rng(100);
  const auto x = uniform_design(200, rng);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(200, 3.25);
  LocalPolyConfig cfg;
  cfg.degree = 0;
  cfg.bandwidth = 0.4;
  const auto f0 = local_poly_fit(x, c, {}, cfg);
  for (double q = -0.8; q <= 0.81; q += 0.4)
    CHECK(f0.evaluate1(q) == doctest::Approx(3.25).epsilon(1e-12));

  Eigen::VectorXd lin(200);
  for (Eigen::Index i = 0; i < 200; ++i) lin[i] = 2.0 + 3.0 * x(i, 0);
  cfg.degree = 1;
  const auto f1 = local_poly_fit(x, lin, {}, cfg);
  for (double q = -0.9; q <= 0.91; q += 0.3)
    CHECK(f1.evaluate1(q) == doctest::Approx(2.0 + 3.0 * q).epsilon(1e-8));

  Eigen::VectorXd quad(200);
  for (Eigen::Index i = 0; i < 200; ++i)
    quad[i] = 1.0 - 2.0 * x(i, 0) + 0.5 * x(i, 0) * x(i, 0);
  cfg.degree = 2;
  const auto f2 = local_poly_fit(x, quad, {}, cfg);
  for (double q = -0.9; q <= 0.91; q += 0.3) {
    const double want = 1.0 - 2.0 * q + 0.5 * q * q;
    CHECK(f2.evaluate1(q) == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("multivariate local linear reproduces planes") {
  RngStream rng(101);
  Eigen::MatrixXd x(300, 2);
  for (Eigen::Index i = 0; i < 300; ++i) {
    x(i, 0) = rng.uniform(-1, 1);
    x(i, 1) = rng.uniform(-1, 1);
  }
  Eigen::VectorXd y(300);
  for (Eigen::Index i = 0; i < 300; ++i) y[i] = 1.0 + 2.0 * x(i, 0) - x(i, 1);
  LocalPolyConfig cfg;
  cfg.degree = 1;
  cfg.bandwidth = 0.6;
  const auto f = local_poly_fit(x, y, {}, cfg);
  Eigen::VectorXd q(2);
  q << 0.2, -0.3;
  CHECK(f.evaluate(q) == doctest::Approx(1.0 + 0.4 + 0.3).epsilon(1e-8));
}

TEST_CASE("weights localize exactly and match the evaluation") {
  RngStream rng(102);
  const auto x = uniform_design(150, rng);
  Eigen::VectorXd y(150);
  for (Eigen::Index i = 0; i < 150; ++i) y[i] = std::sin(2.0 * x(i, 0));
  LocalPolyConfig cfg;
  cfg.degree = 1;
  cfg.bandwidth = 0.3;
  const auto f = local_poly_fit(x, y, {}, cfg);
  CHECK(f.has_weights());
  Eigen::VectorXd q(1);
  q << 0.15;
  const Eigen::VectorXd w = f.weights_at(q);
  for (Eigen::Index i = 0; i < 150; ++i)
    if (std::fabs(x(i, 0) - 0.15) > cfg.bandwidth) CHECK(w[i] == 0.0);
  // linear smoother consistency
  CHECK(w.dot(y) == doctest::Approx(f.evaluate(q)).epsilon(1e-10));
}

TEST_CASE("boxcar degree zero is a windowed mean") {
  RngStream rng(103);
  const auto x = uniform_design(50, rng);
  Eigen::VectorXd y(50);
  for (Eigen::Index i = 0; i < 50; ++i) y[i] = rng.uniform(0, 1);
  LocalPolyConfig cfg;
  cfg.degree = 0;
  cfg.bandwidth = 5.0;  // window covers every point
  cfg.kernel = KernelKind::BoxcarProduct;
  const auto f = local_poly_fit(x, y, {}, cfg);
  CHECK(f.evaluate1(0.0) == doctest::Approx(y.mean()).epsilon(1e-12));
}

TEST_CASE("singular designs are reported") {
  Eigen::MatrixXd x(5, 1);
  x << -0.9, -0.8, 0.0, 0.8, 0.9;
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  LocalPolyConfig cfg;
  cfg.degree = 2;
  cfg.bandwidth = 0.05;  // nobody near 0.4 and too few points anywhere
  const auto f = local_poly_fit(x, y, {}, cfg);
  CHECK_THROWS_AS(f.evaluate1(0.4), SingularDesignError);

  // duplicated support point: rank-deficient beyond the rescue
  Eigen::MatrixXd xd(6, 1);
  xd << 0.1, 0.1, 0.1, 0.1, 0.9, -0.9;
  Eigen::VectorXd yd(6);
  yd << 1, 1, 1, 1, 2, 2;
  cfg.degree = 1;
  cfg.bandwidth = 0.2;
  const auto fd = local_poly_fit(xd, yd, {}, cfg);
  CHECK_THROWS_AS(fd.evaluate1(0.1), SingularDesignError);
}

TEST_CASE("row weights act like replication") {
  Eigen::MatrixXd x(4, 1);
  x << -0.5, 0.0, 0.5, 0.0;
  Eigen::VectorXd y(4);
  y << 1.0, 2.0, 3.0, 4.0;
  Eigen::VectorXd w(4);
  w << 1.0, 2.0, 1.0, 1.0;
  LocalPolyConfig cfg;
  cfg.degree = 0;
  cfg.bandwidth = 2.0;
  cfg.kernel = KernelKind::BoxcarProduct;
  const auto f = local_poly_fit(x, y, w, cfg);
  CHECK(f.evaluate1(0.0) ==
        doctest::Approx((1 + 2 * 2 + 3 + 4) / 5.0).epsilon(1e-12));
}

TEST_CASE("shift equivariance of the local fit") {
  RngStream rng(104);
  const auto x = uniform_design(120, rng);
  Eigen::VectorXd y(120);
  for (Eigen::Index i = 0; i < 120; ++i)
    y[i] = std::cos(3 * x(i, 0)) + rng.normal(0, 0.2);
  LocalPolyConfig cfg;
  cfg.degree = 1;
  cfg.bandwidth = 0.4;
  const auto f = local_poly_fit(x, y, {}, cfg);
  const Eigen::VectorXd ys = y.array() + 7.5;
  const auto g = local_poly_fit(x, ys, {}, cfg);
  for (double q = -0.8; q <= 0.81; q += 0.2)
    CHECK(g.evaluate1(q) - f.evaluate1(q) ==
          doctest::Approx(7.5).epsilon(1e-8));
}

TEST_CASE("squared smoother weights scale like 1/(n h)") {
  // fixed uniform grid designs; the normalized sup of sum w^2 stays stable
  RngStream rng(105);
  double reference = 0.0;
  for (const int n : {200, 400, 800, 1600}) {
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = -1.0 + 2.0 * (i + 0.5) / n;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.uniform(0, 1);
    LocalPolyConfig cfg;
    cfg.degree = 1;
    cfg.bandwidth = 2.0 * std::pow(n, -1.0 / 3.0);
    const auto f = local_poly_fit(x, y, {}, cfg);
    double sup = 0.0;
    for (double q = -0.7; q <= 0.71; q += 0.35) {
      Eigen::VectorXd qq(1);
      qq << q;
      sup = std::max(sup, f.weights_at(qq).squaredNorm());
    }
    const double normalized = sup * n * cfg.bandwidth;
    if (reference == 0.0) reference = normalized;
    CHECK(normalized == doctest::Approx(reference).epsilon(0.5));
  }
}

TEST_CASE("cross-validated bandwidth lands inside the grid and fits") {
  RngStream rng(106);
  const auto x = uniform_design(160, rng);
  Eigen::VectorXd y(160);
  for (Eigen::Index i = 0; i < 160; ++i)
    y[i] = x(i, 0) * x(i, 0) + rng.normal(0, 0.1);
  LocalPolyConfig cfg;
  cfg.degree = 1;
  cfg.bandwidth_rule = BandwidthRule::CrossValidated;
  const auto f = local_poly_fit(x, y, {}, cfg);
  const double h = f.tuning().get("bandwidth");
  const double pivot = preset_bandwidth(x, 1, 1.0);
  CHECK(h >= pivot / 4.0 * 0.999);
  CHECK(h <= pivot * 4.0 * 1.001);
  CHECK(f.evaluate1(0.5) == doctest::Approx(0.25).epsilon(0.35));
}
