#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cate/dgp.hpp"
#include "cate/errors.hpp"
#include "cate/learners.hpp"
#include "cate/rng.hpp"

using namespace cate;
using namespace cate::learners;

namespace {

ObservationTable make_table(const std::vector<double>& x,
                            const std::vector<double>& a,
                            const std::vector<double>& y) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd xm(n, 1);
  Eigen::VectorXd av(n), yv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xm(i, 0) = x[static_cast<std::size_t>(i)];
    av[i] = a[static_cast<std::size_t>(i)];
    yv[i] = y[static_cast<std::size_t>(i)];
  }
  return ObservationTable::create(xm, av, yv);
}

// quarter folds in declaration order, deterministic content
FoldAssignment block_folds(std::size_t n) {
  FoldAssignment f;
  f.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    f.labels[i] = static_cast<FoldRole>((4 * i) / n);
  return f;
}

dgp::Truth constant_pi_truth(double pi_value) {
  dgp::Truth t;
  t.pi = [pi_value](const XRef&) { return pi_value; };
  t.mu0 = [](const XRef&) { return 0.0; };
  t.mu1 = t.mu0;
  t.eta = t.mu0;
  t.tau = [](const XRef&) { return 0.0; };
  return t;
}

smoothers::Stage2Config spline_stage2() {
  smoothers::Stage2Config cfg;
  cfg.method = smoothers::Stage2Method::Spline;
  return cfg;
}

}  // namespace

TEST_CASE("t-learner recovers a noiseless linear effect") {
  RngStream rng(400);
  const std::size_t n = 400;
  std::vector<double> x(n), a(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = a[i] * x[i];
  }
  const auto table = make_table(x, a, y);
  const auto folds = block_folds(n);
  NuisanceSpec outcome;  // spline
  const auto fit = fit_t_learner(table, folds, outcome);
  for (double q = -0.8; q <= 0.81; q += 0.2)
    CHECK(fit.evaluate1(q) == doctest::Approx(q).epsilon(1e-6).scale(1.0));
}

TEST_CASE("t-learner: constant outcomes give a zero effect") {
  RngStream rng(401);
  const std::size_t n = 200;
  std::vector<double> x(n), a(n), y(n, 2.5);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    a[i] = i % 2 ? 1.0 : 0.0;
  }
  const auto fit = fit_t_learner(make_table(x, a, y), block_folds(n), {});
  for (double q = -0.9; q <= 0.91; q += 0.3)
    CHECK(std::fabs(fit.evaluate1(q)) <= 1e-8);
}

TEST_CASE("t-learner: symmetric arms cancel") {
  RngStream rng(402);
  const std::size_t half = 120;
  std::vector<double> x, a, y;
  for (std::size_t i = 0; i < half; ++i) {
    const double xi = rng.uniform(-1, 1);
    const double yi = dgp::gyorfi_mu(xi) + rng.normal(0, 0.1);
    x.push_back(xi); a.push_back(1.0); y.push_back(yi);
    x.push_back(xi); a.push_back(0.0); y.push_back(yi);
  }
  FoldAssignment folds;
  folds.labels.assign(x.size(), FoldRole::D1B);
  const auto fit = fit_t_learner(make_table(x, a, y), folds, {});
  for (double q = -0.9; q <= 0.91; q += 0.3)
    CHECK(std::fabs(fit.evaluate1(q)) <= 1e-9);
}

TEST_CASE("t-learner: an empty arm is an error") {
  const std::size_t n = 40;
  std::vector<double> x(n), a(n, 1.0), y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) x[i] = 0.01 * static_cast<double>(i);
  CHECK_THROWS_AS(fit_t_learner(make_table(x, a, y), block_folds(n), {}),
                  EmptyArmError);
}

TEST_CASE("x-learner: equal imputed-effect fits make the weight irrelevant") {
  RngStream rng(403);
  const std::size_t n = 400;
  std::vector<double> x(n), a(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double g = std::sin(2.0 * x[i]);
    y[i] = a[i] == 1.0 ? g : -g;  // both arms impute the same effect curve
  }
  const auto table = make_table(x, a, y);
  const auto folds = block_folds(n);
  NuisanceSpec outcome;
  outcome.method = NuisanceMethod::TrueFunction;
  dgp::Truth t1 = constant_pi_truth(0.2);
  dgp::Truth t2 = constant_pi_truth(0.8);
  NuisanceSpec prop;
  prop.method = NuisanceMethod::TrueFunction;
  FitContext c1{&t1, 0}, c2{&t2, 0};
  const auto f1 =
      fit_x_learner(table, folds, outcome, prop, spline_stage2(), 0.01, c1);
  const auto f2 =
      fit_x_learner(table, folds, outcome, prop, spline_stage2(), 0.01, c2);
  for (double q = -0.8; q <= 0.81; q += 0.2)
    CHECK(f1.evaluate1(q) == doctest::Approx(f2.evaluate1(q)).epsilon(1e-10));
}

TEST_CASE("x-learner: zero propensity weight selects the treated-arm fit") {
  RngStream rng(404);
  const std::size_t n = 400;
  std::vector<double> x(n), a(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = x[i] * a[i] + rng.normal(0, 0.05);
  }
  const auto table = make_table(x, a, y);
  const auto folds = block_folds(n);
  dgp::Truth zero_pi = constant_pi_truth(0.0);
  NuisanceSpec outcome;
  outcome.method = NuisanceMethod::TrueFunction;
  NuisanceSpec prop;
  prop.method = NuisanceMethod::TrueFunction;
  FitContext ctx{&zero_pi, 0};
  const auto fit =
      fit_x_learner(table, folds, outcome, prop, spline_stage2(), 0.0, ctx);

  // rebuild the treated-arm imputed regression by hand
  std::vector<double> xs, ys;
  const auto d2 = folds.indices(FoldRole::D2);
  for (const auto i : d2)
    if (table.a[i] == 1.0) {
      xs.push_back(table.x(i, 0));
      ys.push_back(table.y[i]);  // mu0 truth is zero
    }
  Eigen::VectorXd xv(static_cast<Eigen::Index>(xs.size())),
      yv(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xv[static_cast<Eigen::Index>(i)] = xs[i];
    yv[static_cast<Eigen::Index>(i)] = ys[i];
  }
  const auto x1 = smoothers::smoothing_spline_fit(xv, yv);
  for (double q = -0.8; q <= 0.81; q += 0.4)
    CHECK(fit.evaluate1(q) == doctest::Approx(x1.evaluate1(q)).epsilon(1e-10));
}

TEST_CASE("x-learner: exact nuisances on a zero-effect design") {
  RngStream rng(405);
  const std::size_t n = 400;
  std::vector<double> x(n), a(n), y(n);
  dgp::Truth truth = dgp::piecewise_truth();
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = dgp::gyorfi_mu(x[i]);  // noiseless, zero effect
  }
  NuisanceSpec outcome;
  outcome.method = NuisanceMethod::TrueFunction;
  NuisanceSpec prop;
  prop.method = NuisanceMethod::TrueFunction;
  FitContext ctx{&truth, 0};
  const auto fit = fit_x_learner(make_table(x, a, y), block_folds(n), outcome,
                                 prop, spline_stage2(), 0.01, ctx);
  for (double q = -0.8; q <= 0.81; q += 0.2)
    CHECK(std::fabs(fit.evaluate1(q)) <= 1e-9);
}

TEST_CASE("ipw-learner: zero outcomes give a zero fit") {
  RngStream rng(406);
  const std::size_t n = 400;
  std::vector<double> x(n), a(n), y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    a[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
  }
  dgp::Truth truth = constant_pi_truth(0.4);
  NuisanceSpec prop;
  prop.method = NuisanceMethod::TrueFunction;
  FitContext ctx{&truth, 0};
  const auto fit = fit_ipw_learner(make_table(x, a, y), block_folds(n), prop,
                                   spline_stage2(), 0.01, ctx);
  for (double q = -0.8; q <= 0.81; q += 0.2)
    CHECK(std::fabs(fit.evaluate1(q)) <= 1e-10);
}

TEST_CASE("oracle dr-learner equals the pseudo-outcome construction") {
  const auto sample = dgp::sample_piecewise(800, 91);
  const auto folds = assign_quarter_folds(800, 17);
  FitContext ctx{&sample.truth, 0};
  const auto fit =
      fit_oracle_dr_learner(sample.table, folds, spline_stage2(), ctx);

  const auto d2 = folds.indices(FoldRole::D2);
  Eigen::VectorXd xs(static_cast<Eigen::Index>(d2.size())),
      ps(static_cast<Eigen::Index>(d2.size()));
  for (std::size_t k = 0; k < d2.size(); ++k) {
    const auto i = d2[k];
    const double x = sample.table.x(i, 0);
    const double pi = 0.1 + 0.8 * (x > 0);
    const double mu = dgp::gyorfi_mu(x);
    const double a = sample.table.a[i], y = sample.table.y[i];
    xs[static_cast<Eigen::Index>(k)] = x;
    ps[static_cast<Eigen::Index>(k)] =
        ((a - pi) / (pi * (1.0 - pi))) * (y - mu) + mu - mu;
  }
  const auto manual = smoothers::smoothing_spline_fit(xs, ps);
  for (double q = -0.9; q <= 0.91; q += 0.3)
    CHECK(fit.evaluate1(q) == doctest::Approx(manual.evaluate1(q)).epsilon(1e-12));
}

TEST_CASE("dr-learner crossfit is the mean of the three rotations") {
  const auto sample = dgp::sample_piecewise(600, 92);
  const auto folds = assign_quarter_folds(600, 18);
  DrLearnerConfig cfg;
  cfg.propensity.method = NuisanceMethod::TrueFunction;
  cfg.outcome.method = NuisanceMethod::Spline;
  cfg.stage2 = spline_stage2();
  cfg.crossfit = true;
  FitContext ctx{&sample.truth, 0};
  const auto cross = fit_dr_learner(sample.table, folds, cfg, ctx);

  cfg.crossfit = false;
  const auto r1 = fit_dr_learner(sample.table, folds, cfg, ctx);
  auto relabel = [&](FoldRole to_d1a, FoldRole to_d1b, FoldRole to_d2) {
    FoldAssignment f = folds;
    for (auto& l : f.labels) {
      if (l == FoldRole::Eval) continue;
      if (l == to_d1a) l = FoldRole::D1A;
      else if (l == to_d1b) l = FoldRole::D1B;
      else l = FoldRole::D2;
    }
    return f;
  };
  // rotation 2: propensity on D1B, outcomes on D2, test on D1A
  const auto r2 = fit_dr_learner(
      sample.table, relabel(FoldRole::D1B, FoldRole::D2, FoldRole::D1A), cfg,
      ctx);
  // rotation 3: propensity on D1A, outcomes on D2, test on D1B
  const auto r3 = fit_dr_learner(
      sample.table, relabel(FoldRole::D1A, FoldRole::D2, FoldRole::D1B), cfg,
      ctx);
  for (double q = -0.8; q <= 0.81; q += 0.2) {
    const double mean =
        (r1.evaluate1(q) + r2.evaluate1(q) + r3.evaluate1(q)) / 3.0;
    CHECK(cross.evaluate1(q) == doctest::Approx(mean).epsilon(1e-12));
  }
  CHECK(cross.crossfit() == CrossfitMode::Averaged3);
}

TEST_CASE("learners are invariant to row permutation") {
  const auto sample = dgp::sample_piecewise(400, 93);
  const auto folds = assign_quarter_folds(400, 19);
  DrLearnerConfig cfg;
  cfg.propensity.method = NuisanceMethod::Spline;
  cfg.outcome.method = NuisanceMethod::Spline;
  cfg.stage2 = spline_stage2();
  const auto base = fit_dr_learner(sample.table, folds, cfg, {});

  RngStream rng(94);
  std::vector<Eigen::Index> perm(400);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.below(i + 1)]);
  ObservationTable shuffled = sample.table.subset(perm);
  FoldAssignment pf;
  pf.labels.resize(400);
  for (std::size_t k = 0; k < perm.size(); ++k)
    pf.labels[k] = folds.labels[static_cast<std::size_t>(perm[k])];
  const auto moved = fit_dr_learner(shuffled, pf, cfg, {});
  for (double q = -0.8; q <= 0.81; q += 0.2)
    CHECK(moved.evaluate1(q) == doctest::Approx(base.evaluate1(q)).epsilon(1e-12));
}

TEST_CASE("adding a constant to outcomes leaves effects unchanged") {
  const auto sample = dgp::sample_piecewise(600, 95);
  const auto folds = assign_quarter_folds(600, 20);
  ObservationTable shifted = sample.table;
  shifted.y.array() += 11.0;

  DrLearnerConfig cfg;
  cfg.propensity.method = NuisanceMethod::Spline;
  cfg.outcome.method = NuisanceMethod::Spline;
  cfg.stage2 = spline_stage2();
  const auto dr0 = fit_dr_learner(sample.table, folds, cfg, {});
  const auto dr1 = fit_dr_learner(shifted, folds, cfg, {});
  const auto t0 = fit_t_learner(sample.table, folds, {});
  const auto t1 = fit_t_learner(shifted, folds, {});
  NuisanceSpec prop;
  prop.method = NuisanceMethod::Spline;
  const auto x0 = fit_x_learner(sample.table, folds, {}, prop, spline_stage2(),
                                0.01, {});
  const auto x1 = fit_x_learner(shifted, folds, {}, prop, spline_stage2(),
                                0.01, {});
  for (double q = -0.8; q <= 0.81; q += 0.2) {
    CHECK(dr1.evaluate1(q) - dr0.evaluate1(q) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(t1.evaluate1(q) - t0.evaluate1(q) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(x1.evaluate1(q) - x0.evaluate1(q) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  }
}

namespace {

// constant-effect design: Y = eta(X) + (A - pi(X)) c
struct ConstantEffect {
  ObservationTable table;
  dgp::Truth truth;
};

ConstantEffect constant_effect_sample(std::size_t n, double c,
                                      std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> x(n), a(n), y(n);
  auto pi = [](double v) { return 0.35 + 0.3 * (v > 0); };
  auto eta = [](double v) { return 0.5 * v * v; };
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    a[i] = rng.bernoulli(pi(x[i])) ? 1.0 : 0.0;
    y[i] = eta(x[i]) + (a[i] - pi(x[i])) * c;
  }
  ConstantEffect out{make_table(x, a, y), {}};
  out.truth.pi = [pi](const XRef& v) { return pi(v[0]); };
  out.truth.eta = [eta](const XRef& v) { return eta(v[0]); };
  out.truth.mu0 = [pi, eta, c](const XRef& v) {
    return eta(v[0]) - pi(v[0]) * c;
  };
  out.truth.mu1 = [pi, eta, c](const XRef& v) {
    return eta(v[0]) + (1.0 - pi(v[0])) * c;
  };
  out.truth.tau = [c](const XRef&) { return c; };
  return out;
}

}  // namespace

TEST_CASE("lp-r-learner: noiseless constant effect is recovered exactly") {
  const double c = 0.8;
  auto sample = constant_effect_sample(600, c, 96);
  const auto folds = block_folds(600);
  LpRConfig cfg;
  cfg.gamma = 2.0;
  cfg.h = 0.5;
  cfg.nuisance.method = NuisanceMethod::TrueFunction;
  FitContext ctx{&sample.truth, 0};
  const auto fit = fit_lp_r_learner(sample.table, folds, cfg, ctx);
  for (double q = -0.7; q <= 0.71; q += 0.35)
    CHECK(fit.evaluate1(q) == doctest::Approx(c).epsilon(1e-10));
}

TEST_CASE("lp-r-learner with true nuisances reduces to a ratio regression") {
  const auto sample = dgp::sample_piecewise(800, 97);
  const auto folds = block_folds(800);
  LpRConfig cfg;
  cfg.gamma = 1.0;
  cfg.h = 0.35;
  cfg.nuisance.method = NuisanceMethod::TrueFunction;
  FitContext ctx{&sample.truth, 0};
  const auto fit = fit_lp_r_learner(sample.table, folds, cfg, ctx);

  // independent route: dense weighted least squares of phi/nu on the basis,
  // with kernel times the realized treatment-residual product as weights
  const auto d2 = folds.indices(FoldRole::D2);
  for (double q = -0.6; q <= 0.61; q += 0.3) {
    std::vector<double> xs, zs, ws;
    for (const auto i : d2) {
      const double x = sample.table.x(i, 0);
      const double u = (x - q) / cfg.h;
      const double kw = std::max(0.0, 1.0 - u * u);
      if (kw == 0.0) continue;
      const double pi = 0.1 + 0.8 * (x > 0);
      const double eta = dgp::gyorfi_mu(x);
      const double ares = sample.table.a[i] - pi;
      const double nu = ares * ares;
      const double phi = ares * (sample.table.y[i] - eta);
      xs.push_back(x);
      zs.push_back(phi / nu);
      ws.push_back(kw * nu);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd B(m, 2);
    Eigen::VectorXd z(m), w(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      B(i, 0) = 1.0;
      B(i, 1) = xs[static_cast<std::size_t>(i)] - q;
      z[i] = zs[static_cast<std::size_t>(i)];
      w[i] = ws[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd Bw = w.asDiagonal() * B;
    const Eigen::VectorXd theta =
        (B.transpose() * Bw).ldlt().solve(Bw.transpose() * z);
    CHECK(fit.evaluate1(q) == doctest::Approx(theta[0]).epsilon(1e-8));
  }
}

TEST_CASE("lp-r-learner flags windows without treatment contrast") {
  const std::size_t n = 400;
  RngStream rng(98);
  std::vector<double> x(n), a(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    a[i] = x[i] > 0 ? 1.0 : 0.0;  // deterministic assignment
    y[i] = rng.normal(0, 1);
  }
  auto table = make_table(x, a, y);
  const auto folds = block_folds(n);
  LpRConfig cfg;
  cfg.gamma = 1.0;
  cfg.h = 0.3;
  dgp::Truth truth = constant_pi_truth(0.5);
  truth.eta = [](const XRef&) { return 0.0; };
  cfg.nuisance.method = NuisanceMethod::TrueFunction;
  FitContext ctx{&truth, 0};
  const auto fit = fit_lp_r_learner(table, folds, cfg, ctx);
  Eigen::VectorXd q(1);
  q << 0.85;  // window is all treated
  CHECK_THROWS_AS(fit.evaluate(q), IllConditionedError);
  CHECK_FALSE(fit.try_evaluate(q).has_value());
  q << 0.0;  // both arms present near the break
  CHECK(fit.try_evaluate(q).has_value());
}

TEST_CASE("argmin equivalence on a small instance") {
  auto sample = constant_effect_sample(50, 0.0, 99);
  // add noise so the solution is nontrivial
  RngStream rng(100);
  for (Eigen::Index i = 0; i < sample.table.y.size(); ++i)
    sample.table.y[i] += rng.normal(0, 0.3);
  const Eigen::Index n = sample.table.rows();
  Eigen::VectorXd pia(n), pib(n), eta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto xi = sample.table.x.row(i).transpose();
    pia[i] = sample.truth.pi(xi) + 0.05;  // deliberately off
    pib[i] = sample.truth.pi(xi) - 0.05;
    eta[i] = sample.truth.eta(xi) + 0.1;
  }
  Eigen::VectorXd q(1);
  q << 0.1;
  const double h = 0.8;
  const int degree = 2;
  const auto theta = lp_r_local_theta(sample.table.x, sample.table.a,
                                      sample.table.y, pia, pib, eta, q, h,
                                      degree, smoothers::KernelKind::EpanechnikovProduct);

  // brute force: reconstruct the quadratic objective from direct evaluation
  auto objective = [&](const Eigen::VectorXd& th) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = sample.table.x(i, 0);
      const double u = (x - q[0]) / h;
      const double kw = std::max(0.0, 1.0 - u * u);
      if (kw == 0.0) continue;
      const double dx = x - q[0];
      const double basis = th[0] + th[1] * dx + th[2] * dx * dx;
      const double ratio =
          (sample.table.a[i] - pia[i]) / (sample.table.a[i] - pib[i]);
      const double resid = (sample.table.y[i] - eta[i]) -
                           basis * (sample.table.a[i] - pib[i]);
      acc += kw * ratio * resid * resid;
    }
    return acc / static_cast<double>(n);
  };
  const int p = 3;
  Eigen::MatrixXd M(p, p);
  Eigen::VectorXd v(p);
  const double j0 = objective(Eigen::VectorXd::Zero(p));
  for (int i = 0; i < p; ++i) {
    Eigen::VectorXd ei = Eigen::VectorXd::Zero(p);
    ei[i] = 1.0;
    const double ji = objective(ei);
    const double j2i = objective(2.0 * ei);
    M(i, i) = (j2i - 2.0 * ji + j0) / 2.0;
    v[i] = (M(i, i) + j0 - ji) / 2.0;
    for (int j = 0; j < i; ++j) {
      Eigen::VectorXd eij = Eigen::VectorXd::Zero(p);
      eij[i] = eij[j] = 1.0;
      Eigen::VectorXd ej = Eigen::VectorXd::Zero(p);
      ej[j] = 1.0;
      M(i, j) = M(j, i) =
          (objective(eij) - ji - objective(ej) + j0) / 2.0;
    }
  }
  const Eigen::VectorXd brute = M.ldlt().solve(v);
  for (int i = 0; i < p; ++i)
    CHECK(theta[i] == doctest::Approx(brute[i]).epsilon(1e-6).scale(1.0));
  CHECK(objective(theta) <= objective(brute) * (1.0 + 1e-9) + 1e-12);
}

TEST_CASE("tuning presets") {
  const auto p1 = cor3_preset(1000, 1.0, 1, 1.0);
  CHECK(p1.h == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(p1.k == doctest::Approx(1000.0 / std::pow(std::log(1000.0), 2)));

  // exponent vanishes as the effect gets arbitrarily smooth
  const auto psmooth = cor3_preset(100000, 1e9, 1, 0.7);
  CHECK(psmooth.h == doctest::Approx(0.7).epsilon(1e-3));
  // larger gamma widens the bandwidth
  CHECK(cor3_preset(5000, 2.0, 1).h > cor3_preset(5000, 1.0, 1).h);

  const auto p4 = cor4_preset(1000, 2.0, 1.0, 2);
  CHECK(p4.h == doctest::Approx(std::pow(1000.0, -0.3)).epsilon(1e-12));
  CHECK(p4.h < 1.0);
  CHECK(p4.k > 1.0);
  // s = gamma collapses the h exponent to -3/(2 gamma + 2 d)
  const double g = 1.7;
  const auto peq = cor4_preset(4000, g, g, 3);
  CHECK(peq.h ==
        doctest::Approx(std::pow(4000.0, -3.0 / (2.0 * g + 2.0 * 3.0))));
}

TEST_CASE("design matrix diagnostics") {
  const auto sample = dgp::sample_piecewise(500, 101);
  Eigen::VectorXd weights(500);
  for (Eigen::Index i = 0; i < 500; ++i) {
    const double pi = 0.1 + 0.8 * (sample.table.x(i, 0) > 0);
    weights[i] = pi * (1.0 - pi);
  }
  Eigen::VectorXd q(1);
  q << 0.2;
  const auto qm = lp_r_q_matrix(sample.table.x, weights, q, 0.4, 1,
                                smoothers::KernelKind::EpanechnikovProduct);
  CHECK((qm.qhat - qm.qhat.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(qm.min_eigenvalue > 0.0);
  CHECK_FALSE(qm.ill_conditioned);
  CHECK(qm.condition >= 1.0);
}
