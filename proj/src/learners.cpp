#include "cate/learners.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cate/errors.hpp"
#include "cate/pseudo.hpp"
#include "cate/rng.hpp"
#include "cate/simd.hpp"
#include "smoothers/local_solve.hpp"

namespace cate::learners {

using smoothers::KernelKind;
using smoothers::NuisanceFit;
using smoothers::NuisanceKind;
using smoothers::PolyBasis;

const char* learner_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::T: return "t";
    case LearnerKind::X: return "x";
    case LearnerKind::Ipw: return "ipw";
    case LearnerKind::Dr: return "dr";
    case LearnerKind::OracleDr: return "oracle_dr";
    case LearnerKind::LpR: return "lpr";
  }
  return "?";
}

double CateFit::evaluate(const XRef& x) const {
  double acc = 0.0;
  for (const auto& part : parts_) acc += part->evaluate(x);
  return acc / static_cast<double>(parts_.size());
}

double CateFit::evaluate1(double x) const {
  Eigen::VectorXd v(1);
  v[0] = x;
  return evaluate(v);
}

std::optional<double> CateFit::try_evaluate(const XRef& x) const {
  try {
    return evaluate(x);
  } catch (const IllConditionedError&) {
    return std::nullopt;
  } catch (const SingularDesignError&) {
    return std::nullopt;
  }
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x,
                            const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v,
                       const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = v[rows[k]];
  return out;
}

double covariate_range(const Eigen::MatrixXd& x) {
  double range = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    range = std::max(range, x.col(j).maxCoeff() - x.col(j).minCoeff());
  return range > 0.0 ? range : 1.0;
}

//! Ground-truth function exposed through the NuisanceFit interface.
class FunctionNuisance : public NuisanceFit::Impl {
 public:
  explicit FunctionNuisance(dgp::Truth::Fn fn) : fn_(std::move(fn)) {}
  double evaluate(const XRef& x) const override { return fn_(x); }

 private:
  dgp::Truth::Fn fn_;
};

//! expit(logit(pi(x)) + e(x)), e(x) ~ N(n^-a, n^-2a) keyed on the covariate
//! bits, so every site gets its own draw and repeated queries are stable.
class RateControlledNuisance : public NuisanceFit::Impl {
 public:
  RateControlledNuisance(dgp::Truth::Fn pi, double n_rate, double alpha,
                         std::uint64_t seed)
      : pi_(std::move(pi)), m_(std::pow(n_rate, -alpha)), seed_(seed) {}

  double evaluate(const XRef& x) const override {
    std::uint64_t h = seed_;
    for (Eigen::Index j = 0; j < x.size(); ++j)
      h = derive_seed(h, std::bit_cast<std::uint64_t>(x[j]),
                      static_cast<std::uint64_t>(j) + 1);
    RngStream rng(h, 0x7A7E5EED);
    return dgp::expit(dgp::logit(pi_(x)) + rng.normal(m_, m_));
  }

 private:
  dgp::Truth::Fn pi_;
  double m_;
  std::uint64_t seed_;
};

NuisanceFit wrap_function(dgp::Truth::Fn fn, NuisanceKind kind) {
  return NuisanceFit(kind, std::make_shared<FunctionNuisance>(std::move(fn)));
}

const dgp::Truth& require_truth(const FitContext& ctx, const char* what) {
  if (!ctx.truth)
    throw ValidationError(std::string(what) +
                          " requires ground truth in the fit context");
  return *ctx.truth;
}

//! Regression of resp on x rows by the requested method.
NuisanceFit fit_regression(const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& resp,
                           const NuisanceSpec& spec, NuisanceKind kind) {
  switch (spec.method) {
    case NuisanceMethod::Spline:
      if (x.cols() != 1)
        throw ValidationError("spline nuisance needs d = 1");
      return smoothers::smoothing_spline_fit(x.col(0), resp, kind);
    case NuisanceMethod::LocalPoly:
      return smoothers::local_poly_fit(x, resp, Eigen::VectorXd(),
                                       spec.local_poly, kind);
    case NuisanceMethod::LassoGaussian: {
      auto cfg = spec.lasso;
      cfg.family = smoothers::LassoConfig::Family::Gaussian;
      return smoothers::lasso_fit(x, resp, cfg, kind);
    }
    case NuisanceMethod::LassoLogistic: {
      auto cfg = spec.lasso;
      cfg.family = smoothers::LassoConfig::Family::Logistic;
      return smoothers::lasso_fit(x, resp, cfg, kind);
    }
    default:
      throw ValidationError("method is not a data-driven regression");
  }
}

NuisanceFit fit_propensity(const ObservationTable& data,
                           const std::vector<Eigen::Index>& rows,
                           const NuisanceSpec& spec, const FitContext& ctx) {
  if (spec.method == NuisanceMethod::TrueFunction)
    return wrap_function(require_truth(ctx, "true propensity").pi,
                         NuisanceKind::Propensity);
  if (spec.method == NuisanceMethod::RateControlled) {
    const auto& truth = require_truth(ctx, "rate-controlled propensity");
    const double n_rate = spec.rate_n > 0.0
                              ? spec.rate_n
                              : static_cast<double>(rows.size());
    return NuisanceFit(NuisanceKind::Propensity,
                       std::make_shared<RateControlledNuisance>(
                           truth.pi, n_rate, spec.rate_alpha, ctx.seed));
  }
  if (rows.empty()) throw ValidationError("empty propensity training fold");
  return fit_regression(gather_rows(data.x, rows), gather(data.a, rows), spec,
                        NuisanceKind::Propensity);
}

struct OutcomePair {
  NuisanceFit mu0, mu1;
};

OutcomePair fit_outcome_pair(const ObservationTable& data,
                             const std::vector<Eigen::Index>& rows,
                             const NuisanceSpec& spec, const FitContext& ctx,
                             const char* fold_name) {
  if (spec.method == NuisanceMethod::TrueFunction) {
    const auto& truth = require_truth(ctx, "true outcome regressions");
    return {wrap_function(truth.mu0, NuisanceKind::OutcomeMu0),
            wrap_function(truth.mu1, NuisanceKind::OutcomeMu1)};
  }
  std::vector<Eigen::Index> treated, control;
  for (const Eigen::Index i : rows)
    (data.a[i] == 1.0 ? treated : control).push_back(i);
  if (treated.empty() || control.empty())
    throw EmptyArmError(std::string("fold ") + fold_name +
                        " lacks one treatment arm");
  OutcomePair out;
  out.mu0 = fit_regression(gather_rows(data.x, control),
                           gather(data.y, control), spec,
                           NuisanceKind::OutcomeMu0);
  out.mu1 = fit_regression(gather_rows(data.x, treated),
                           gather(data.y, treated), spec,
                           NuisanceKind::OutcomeMu1);
  return out;
}

NuisanceFit fit_eta(const ObservationTable& data,
                    const std::vector<Eigen::Index>& rows,
                    const NuisanceSpec& spec, const FitContext& ctx) {
  if (spec.method == NuisanceMethod::TrueFunction)
    return wrap_function(require_truth(ctx, "true marginal regression").eta,
                         NuisanceKind::MarginalEta);
  if (rows.empty()) throw ValidationError("empty marginal training fold");
  return fit_regression(gather_rows(data.x, rows), gather(data.y, rows), spec,
                        NuisanceKind::MarginalEta);
}

class NuisanceAsCate : public CateFit::Impl {
 public:
  explicit NuisanceAsCate(NuisanceFit fit) : fit_(std::move(fit)) {}
  double evaluate(const XRef& x) const override { return fit_.evaluate(x); }

 private:
  NuisanceFit fit_;
};

class DiffImpl : public CateFit::Impl {
 public:
  DiffImpl(NuisanceFit mu0, NuisanceFit mu1)
      : mu0_(std::move(mu0)), mu1_(std::move(mu1)) {}
  double evaluate(const XRef& x) const override {
    return mu1_.evaluate(x) - mu0_.evaluate(x);
  }

 private:
  NuisanceFit mu0_, mu1_;
};

class XCombineImpl : public CateFit::Impl {
 public:
  XCombineImpl(NuisanceFit x0, NuisanceFit x1, NuisanceFit pihat, double eps)
      : x0_(std::move(x0)), x1_(std::move(x1)), pihat_(std::move(pihat)),
        eps_(eps) {}
  double evaluate(const XRef& x) const override {
    double p = pihat_.evaluate(x);
    p = eps_ > 0.0 ? pseudo::clip_propensity(p, eps_)
                   : std::min(1.0, std::max(0.0, p));
    return p * x0_.evaluate(x) + (1.0 - p) * x1_.evaluate(x);
  }

 private:
  NuisanceFit x0_, x1_, pihat_;
  double eps_;
};

std::vector<Eigen::Index> role_rows(const FoldAssignment& folds, FoldRole role,
                                    const char* who) {
  auto rows = folds.indices(role);
  if (rows.empty())
    throw ValidationError(std::string(who) + " needs a nonempty " +
                          fold_role_name(role) + " fold");
  return rows;
}

}  // namespace

CateFit fit_t_learner(const ObservationTable& data,
                      const FoldAssignment& folds, const NuisanceSpec& outcome,
                      const FitContext& ctx) {
  const auto rows = role_rows(folds, FoldRole::D1B, "t-learner");
  auto pair = fit_outcome_pair(data, rows, outcome, ctx, "D1B");
  smoothers::TuningRecord t;
  return CateFit(
      LearnerKind::T, CrossfitMode::SingleSplit,
      {std::make_shared<DiffImpl>(std::move(pair.mu0), std::move(pair.mu1))},
      std::move(t));
}

CateFit fit_x_learner(const ObservationTable& data,
                      const FoldAssignment& folds, const NuisanceSpec& outcome,
                      const NuisanceSpec& propensity,
                      const smoothers::Stage2Config& stage2, double clip_eps,
                      const FitContext& ctx) {
  const auto rows1b = role_rows(folds, FoldRole::D1B, "x-learner");
  const auto rows2 = role_rows(folds, FoldRole::D2, "x-learner");
  auto mus = fit_outcome_pair(data, rows1b, outcome, ctx, "D1B");
  NuisanceFit pihat =
      fit_propensity(data, folds.indices(FoldRole::D1A), propensity, ctx);

  std::vector<Eigen::Index> treated, control;
  for (const Eigen::Index i : rows2)
    (data.a[i] == 1.0 ? treated : control).push_back(i);
  if (treated.empty() || control.empty())
    throw EmptyArmError("fold D2 lacks one treatment arm");

  Eigen::VectorXd imp1(static_cast<Eigen::Index>(treated.size()));
  for (std::size_t k = 0; k < treated.size(); ++k) {
    const Eigen::Index i = treated[k];
    imp1[static_cast<Eigen::Index>(k)] =
        data.y[i] - mus.mu0.evaluate(data.x.row(i).transpose());
  }
  Eigen::VectorXd imp0(static_cast<Eigen::Index>(control.size()));
  for (std::size_t k = 0; k < control.size(); ++k) {
    const Eigen::Index i = control[k];
    imp0[static_cast<Eigen::Index>(k)] =
        mus.mu1.evaluate(data.x.row(i).transpose()) - data.y[i];
  }
  NuisanceFit x1 =
      smoothers::stage2_regress(imp1, gather_rows(data.x, treated), stage2);
  NuisanceFit x0 =
      smoothers::stage2_regress(imp0, gather_rows(data.x, control), stage2);
  smoothers::TuningRecord t;
  t.set("clip_eps", clip_eps);
  return CateFit(LearnerKind::X, CrossfitMode::SingleSplit,
                 {std::make_shared<XCombineImpl>(std::move(x0), std::move(x1),
                                                 std::move(pihat), clip_eps)},
                 std::move(t));
}

CateFit fit_ipw_learner(const ObservationTable& data,
                        const FoldAssignment& folds,
                        const NuisanceSpec& propensity,
                        const smoothers::Stage2Config& stage2, double clip_eps,
                        const FitContext& ctx) {
  const auto rows2 = role_rows(folds, FoldRole::D2, "ipw-learner");
  NuisanceFit pihat =
      fit_propensity(data, folds.indices(FoldRole::D1A), propensity, ctx);
  Eigen::VectorXd xi(static_cast<Eigen::Index>(rows2.size()));
  for (std::size_t k = 0; k < rows2.size(); ++k) {
    const Eigen::Index i = rows2[k];
    const double p = pseudo::clip_propensity(
        pihat.evaluate(data.x.row(i).transpose()), clip_eps);
    xi[static_cast<Eigen::Index>(k)] =
        pseudo::ipw_pseudo(static_cast<int>(data.a[i]), data.y[i], p);
  }
  NuisanceFit fit =
      smoothers::stage2_regress(xi, gather_rows(data.x, rows2), stage2);
  smoothers::TuningRecord t;
  t.set("clip_eps", clip_eps);
  return CateFit(LearnerKind::Ipw, CrossfitMode::SingleSplit,
                 {std::make_shared<NuisanceAsCate>(std::move(fit))},
                 std::move(t));
}

namespace {

std::shared_ptr<const CateFit::Impl> dr_single_split(
    const ObservationTable& data, const std::vector<Eigen::Index>& pi_rows,
    const std::vector<Eigen::Index>& mu_rows,
    const std::vector<Eigen::Index>& stage_rows, const DrLearnerConfig& cfg,
    const FitContext& ctx) {
  NuisanceFit pihat = fit_propensity(data, pi_rows, cfg.propensity, ctx);
  auto mus = fit_outcome_pair(data, mu_rows, cfg.outcome, ctx, "outcome");
  Eigen::VectorXd phi(static_cast<Eigen::Index>(stage_rows.size()));
  for (std::size_t k = 0; k < stage_rows.size(); ++k) {
    const Eigen::Index i = stage_rows[k];
    const auto xi = data.x.row(i).transpose();
    const double p =
        pseudo::clip_propensity(pihat.evaluate(xi), cfg.clip_eps);
    phi[static_cast<Eigen::Index>(k)] =
        pseudo::dr_pseudo(static_cast<int>(data.a[i]), data.y[i], p,
                          mus.mu0.evaluate(xi), mus.mu1.evaluate(xi));
  }
  NuisanceFit fit = smoothers::stage2_regress(
      phi, gather_rows(data.x, stage_rows), cfg.stage2);
  return std::make_shared<NuisanceAsCate>(std::move(fit));
}

}  // namespace

CateFit fit_dr_learner(const ObservationTable& data,
                       const FoldAssignment& folds, const DrLearnerConfig& cfg,
                       const FitContext& ctx) {
  if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 0.5))
    throw ValidationError("clip_eps must lie in (0, 0.5)");
  const auto r1a = role_rows(folds, FoldRole::D1A, "dr-learner");
  const auto r1b = role_rows(folds, FoldRole::D1B, "dr-learner");
  const auto r2 = role_rows(folds, FoldRole::D2, "dr-learner");

  std::vector<std::shared_ptr<const CateFit::Impl>> parts;
  parts.push_back(dr_single_split(data, r1a, r1b, r2, cfg, ctx));
  if (cfg.crossfit) {
    parts.push_back(dr_single_split(data, r1b, r2, r1a, cfg, ctx));
    parts.push_back(dr_single_split(data, r1a, r2, r1b, cfg, ctx));
  }
  smoothers::TuningRecord t;
  t.set("clip_eps", cfg.clip_eps);
  return CateFit(LearnerKind::Dr,
                 cfg.crossfit ? CrossfitMode::Averaged3
                              : CrossfitMode::SingleSplit,
                 std::move(parts), std::move(t));
}

CateFit fit_oracle_dr_learner(const ObservationTable& data,
                              const FoldAssignment& folds,
                              const smoothers::Stage2Config& stage2,
                              const FitContext& ctx, bool crossfit) {
  const auto& truth = require_truth(ctx, "oracle DR-learner");
  auto stage_fit = [&](const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd phi(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Eigen::Index i = rows[k];
      const auto xi = data.x.row(i).transpose();
      phi[static_cast<Eigen::Index>(k)] =
          pseudo::dr_pseudo(static_cast<int>(data.a[i]), data.y[i],
                            truth.pi(xi), truth.mu0(xi), truth.mu1(xi));
    }
    NuisanceFit fit =
        smoothers::stage2_regress(phi, gather_rows(data.x, rows), stage2);
    return std::make_shared<NuisanceAsCate>(std::move(fit));
  };
  std::vector<std::shared_ptr<const CateFit::Impl>> parts;
  parts.push_back(stage_fit(role_rows(folds, FoldRole::D2, "oracle dr")));
  if (crossfit) {
    parts.push_back(stage_fit(role_rows(folds, FoldRole::D1A, "oracle dr")));
    parts.push_back(stage_fit(role_rows(folds, FoldRole::D1B, "oracle dr")));
  }
  smoothers::TuningRecord t;
  return CateFit(LearnerKind::OracleDr,
                 crossfit ? CrossfitMode::Averaged3 : CrossfitMode::SingleSplit,
                 std::move(parts), std::move(t));
}

// ---------------------------------------------------------------------------
// lp-R-Learner

namespace {

struct LpRWindow {
  std::size_t lo = 0, hi = 0;
};

LpRWindow lpr_window(const std::vector<double>& xs, double q, double h,
                     bool boxcar) {
  LpRWindow w;
  if (boxcar) {
    w.lo = static_cast<std::size_t>(
        std::lower_bound(xs.begin(), xs.end(), q - h) - xs.begin());
    w.hi = static_cast<std::size_t>(
        std::upper_bound(xs.begin(), xs.end(), q + h) - xs.begin());
  } else {
    w.lo = static_cast<std::size_t>(
        std::upper_bound(xs.begin(), xs.end(), q - h) - xs.begin());
    w.hi = static_cast<std::size_t>(
        std::lower_bound(xs.begin(), xs.end(), q + h) - xs.begin());
    if (w.hi < w.lo) w.hi = w.lo;
  }
  return w;
}

std::string point_str(const XRef& q) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index j = 0; j < q.size(); ++j) os << (j ? ", " : "") << q[j];
  os << ")";
  return os.str();
}

class LpRPartImpl : public CateFit::Impl {
 public:
  LpRPartImpl(const ObservationTable& data,
              const std::vector<Eigen::Index>& test_rows, NuisanceFit pia,
              NuisanceFit pib, NuisanceFit eta, const LpRConfig& cfg)
      : degree_(static_cast<int>(std::floor(cfg.gamma))),
        h_(cfg.h),
        kernel_(cfg.kernel),
        ridge_(cfg.ridge),
        cond_limit_(cfg.condition_limit),
        basis_(PolyBasis::total_degree(static_cast<int>(data.dim()),
                                       static_cast<int>(std::floor(cfg.gamma)))) {
    const std::size_t n = test_rows.size();
    x_ = gather_rows(data.x, test_rows);
    a_ = gather(data.a, test_rows);
    Eigen::VectorXd y = gather(data.y, test_rows);
    phia_v_.resize(static_cast<Eigen::Index>(n));
    phi_v_.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      const auto xi = x_.row(i).transpose();
      const double pa =
          pseudo::clip_propensity(pia.evaluate(xi), cfg.clip_eps);
      const double pb =
          pseudo::clip_propensity(pib.evaluate(xi), cfg.clip_eps);
      const double ev = eta.evaluate(xi);
      phia_v_[i] = (a_[i] - pa) * (a_[i] - pb);
      phi_v_[i] = (a_[i] - pa) * (y[i] - ev);
    }
    fast1d_ = x_.cols() == 1 && degree_ <= 2;
    if (fast1d_) {
      std::vector<Eigen::Index> order(n);
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::sort(order.begin(), order.end(), [&](Eigen::Index u, Eigen::Index v) {
        return x_(u, 0) < x_(v, 0);
      });
      xs_.resize(n);
      phia_.resize(n);
      phi_.resize(n);
      treated_prefix_.assign(n + 1, 0);
      for (std::size_t k = 0; k < n; ++k) {
        const Eigen::Index i = order[k];
        xs_[k] = x_(i, 0);
        phia_[k] = phia_v_[i];
        phi_[k] = phi_v_[i];
        treated_prefix_[k + 1] =
            treated_prefix_[k] + (a_[i] == 1.0 ? 1 : 0);
      }
    }
  }

  double evaluate(const XRef& q) const override {
    return solve_theta_scaled(q)[0];
  }

  //! Coefficients in the unscaled b(X - x) coordinates.
  Eigen::VectorXd theta(const XRef& q) const {
    Eigen::VectorXd th = solve_theta_scaled(q);
    for (int t = 0; t < basis_.p(); ++t) {
      int deg = 0;
      for (const int e : basis_.exponents[static_cast<std::size_t>(t)])
        deg += e;
      th[t] /= std::pow(h_, deg);
    }
    return th;
  }

 private:
  Eigen::VectorXd solve_theta_scaled(const XRef& q) const {
    const int p = basis_.p();
    Eigen::MatrixXd A(p, p);
    Eigen::VectorXd c(p);
    if (fast1d_) {
      const bool boxcar = kernel_ == KernelKind::BoxcarProduct;
      const auto win = lpr_window(xs_, q[0], h_, boxcar);
      const std::size_t count = win.hi - win.lo;
      if (count < static_cast<std::size_t>(p))
        throw IllConditionedError("query " + point_str(q) + ": " +
                                  std::to_string(count) +
                                  " points in kernel window");
      const int treated = treated_prefix_[win.hi] - treated_prefix_[win.lo];
      if (treated == 0 || static_cast<std::size_t>(treated) == count)
        throw IllConditionedError("query " + point_str(q) +
                                  ": no treatment contrast in kernel window");
      simd::Moments1d m;
      simd::lpr1d_moments(xs_.data() + win.lo, phia_.data() + win.lo,
                          phi_.data() + win.lo, count, q[0], 1.0 / h_, boxcar,
                          &m);
      for (int j = 0; j < p; ++j) {
        for (int k = 0; k < p; ++k) A(j, k) = m.s[j + k];
        c[j] = m.t[j];
      }
    } else {
      const Eigen::Index n = x_.rows();
      Eigen::VectorXd w(n);
      const double inv_h = 1.0 / h_;
      const bool boxcar = kernel_ == KernelKind::BoxcarProduct;
      if (boxcar)
        simd::boxcar_weights(x_.col(0).data(), n, q[0], inv_h, w.data());
      else
        simd::epan_weights(x_.col(0).data(), n, q[0], inv_h, w.data());
      for (Eigen::Index j = 1; j < x_.cols(); ++j) {
        if (boxcar)
          simd::boxcar_weights_mul(x_.col(j).data(), n, q[j], inv_h, w.data());
        else
          simd::epan_weights_mul(x_.col(j).data(), n, q[j], inv_h, w.data());
      }
      std::size_t support = 0;
      bool any_treated = false, any_control = false;
      A.setZero();
      c.setZero();
      Eigen::VectorXd u(x_.cols()), b(p);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (w[i] == 0.0) continue;
        ++support;
        (a_[i] == 1.0 ? any_treated : any_control) = true;
        u = (x_.row(i).transpose() - q) / h_;
        basis_.eval(u, b);
        A.noalias() += w[i] * phia_v_[i] * b * b.transpose();
        c.noalias() += w[i] * phi_v_[i] * b;
      }
      if (support < static_cast<std::size_t>(p))
        throw IllConditionedError("query " + point_str(q) + ": " +
                                  std::to_string(support) +
                                  " points in kernel window");
      if (!any_treated || !any_control)
        throw IllConditionedError("query " + point_str(q) +
                                  ": no treatment contrast in kernel window");
    }
    const auto sol =
        smoothers::detail::solve_spd_checked(A, c, ridge_, cond_limit_);
    if (!sol.ok)
      throw IllConditionedError("query " + point_str(q) +
                                ": design condition " +
                                std::to_string(sol.condition));
    return sol.theta;
  }

  Eigen::MatrixXd x_;
  Eigen::VectorXd a_, phia_v_, phi_v_;
  std::vector<double> xs_, phia_, phi_;
  std::vector<int> treated_prefix_;
  int degree_;
  double h_;
  KernelKind kernel_;
  double ridge_, cond_limit_;
  PolyBasis basis_;
  bool fast1d_ = false;
};

std::shared_ptr<const LpRPartImpl> lpr_single_split(
    const ObservationTable& data, const std::vector<Eigen::Index>& a_rows,
    const std::vector<Eigen::Index>& b_rows,
    const std::vector<Eigen::Index>& test_rows, const LpRConfig& cfg,
    const FitContext& ctx) {
  NuisanceFit pia = fit_propensity(data, a_rows, cfg.nuisance, ctx);
  NuisanceFit pib = fit_propensity(data, b_rows, cfg.nuisance, ctx);
  NuisanceFit eta = fit_eta(data, b_rows, cfg.nuisance, ctx);
  return std::make_shared<LpRPartImpl>(data, test_rows, std::move(pia),
                                       std::move(pib), std::move(eta), cfg);
}

}  // namespace

CateFit fit_lp_r_learner(const ObservationTable& data,
                         const FoldAssignment& folds, const LpRConfig& cfg,
                         const FitContext& ctx) {
  if (!(cfg.gamma > 0.0)) throw ValidationError("gamma must be positive");
  const auto r1a = role_rows(folds, FoldRole::D1A, "lp-r-learner");
  const auto r1b = role_rows(folds, FoldRole::D1B, "lp-r-learner");
  const auto r2 = role_rows(folds, FoldRole::D2, "lp-r-learner");

  LpRConfig eff = cfg;
  const double range = covariate_range(data.x);
  const int d = static_cast<int>(data.dim());
  const auto preset =
      cor3_preset(r2.size(), cfg.gamma, d, cfg.h_scale * range);
  if (!(eff.h > 0.0)) eff.h = preset.h;
  if (!(eff.k_equivalent > 0.0)) eff.k_equivalent = preset.k;
  if (eff.nuisance.method == NuisanceMethod::LocalPoly &&
      eff.nuisance.local_poly.bandwidth_rule ==
          smoothers::BandwidthRule::Fixed &&
      !(eff.nuisance.local_poly.bandwidth > 0.0)) {
    eff.nuisance.local_poly.bandwidth =
        range * std::pow(eff.k_equivalent, -1.0 / d);
  }

  std::vector<std::shared_ptr<const CateFit::Impl>> parts;
  parts.push_back(lpr_single_split(data, r1a, r1b, r2, eff, ctx));
  if (eff.crossfit) {
    parts.push_back(lpr_single_split(data, r1b, r2, r1a, eff, ctx));
    parts.push_back(lpr_single_split(data, r1a, r2, r1b, eff, ctx));
  }
  smoothers::TuningRecord t;
  t.set("gamma", eff.gamma);
  t.set("h", eff.h);
  t.set("k_equivalent", eff.k_equivalent);
  t.set("clip_eps", eff.clip_eps);
  return CateFit(LearnerKind::LpR,
                 eff.crossfit ? CrossfitMode::Averaged3
                              : CrossfitMode::SingleSplit,
                 std::move(parts), std::move(t));
}

LpRPreset cor3_preset(std::size_t n, double gamma, int d, double scale) {
  if (n < 2 || !(gamma > 0.0)) throw ValidationError("cor3 needs n >= 2, gamma > 0");
  LpRPreset out;
  const double nn = static_cast<double>(n);
  out.h = scale * std::pow(nn, -1.0 / (2.0 * gamma + d));
  const double ln = std::log(nn);
  out.k = nn / (ln * ln);
  return out;
}

LpRPreset cor4_preset(std::size_t n, double gamma, double s, int d,
                      double scale_h, double scale_k) {
  if (!(gamma > 0.0) || !(s > 0.0))
    throw ValidationError("cor4 needs s > 0, gamma > 0");
  LpRPreset out;
  const double nn = static_cast<double>(n);
  const double denom = 2.0 * s * gamma + (s + gamma) * d;
  out.h = scale_h * std::pow(nn, -3.0 * s / denom);
  out.k = scale_k * std::pow(nn, 3.0 * gamma * d / 2.0 / denom);
  return out;
}

QMatrices lp_r_q_matrix(const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& weights, const XRef& query,
                        double h, int degree, smoothers::KernelKind kernel,
                        double condition_limit) {
  if (x.rows() != weights.size())
    throw ValidationError("lp_r_q_matrix: size mismatch");
  const int d = static_cast<int>(x.cols());
  const PolyBasis basis = PolyBasis::total_degree(d, degree);
  const int p = basis.p();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd u(d), b(p);
  const double norm = std::pow(h, -d) / static_cast<double>(x.rows());
  const bool boxcar = kernel == KernelKind::BoxcarProduct;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double k = 1.0;
    for (int j = 0; j < d; ++j) {
      const double uu = (x(i, j) - query[j]) / h;
      if (boxcar) {
        if (std::fabs(uu) > 1.0) k = 0.0;
      } else {
        const double t = 1.0 - uu * uu;
        k *= t > 0.0 ? t : 0.0;
      }
      u[j] = x(i, j) - query[j];  // unscaled basis argument
    }
    if (k == 0.0) continue;
    basis.eval(u, b);
    Q.noalias() += norm * k * weights[i] * b * b.transpose();
  }
  QMatrices out;
  out.qhat = Q;
  double lo, hi;
  smoothers::detail::sym_eig_range(Q, &lo, &hi);
  out.min_eigenvalue = lo;
  out.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  out.ill_conditioned = !(out.condition <= condition_limit);
  return out;
}

Eigen::VectorXd lp_r_local_theta(const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& pia,
                                 const Eigen::VectorXd& pib,
                                 const Eigen::VectorXd& eta, const XRef& query,
                                 double h, int degree,
                                 smoothers::KernelKind kernel, double ridge,
                                 double condition_limit) {
  const int d = static_cast<int>(x.cols());
  const PolyBasis basis = PolyBasis::total_degree(d, degree);
  const int p = basis.p();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd u(d), b(p);
  const bool boxcar = kernel == KernelKind::BoxcarProduct;
  std::size_t support = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double k = 1.0;
    for (int j = 0; j < d; ++j) {
      const double uu = (x(i, j) - query[j]) / h;
      if (boxcar) {
        if (std::fabs(uu) > 1.0) k = 0.0;
      } else {
        const double t = 1.0 - uu * uu;
        k *= t > 0.0 ? t : 0.0;
      }
      u[j] = (x(i, j) - query[j]) / h;
    }
    if (k == 0.0) continue;
    ++support;
    basis.eval(u, b);
    const double phia = (a[i] - pia[i]) * (a[i] - pib[i]);
    const double phi = (a[i] - pia[i]) * (y[i] - eta[i]);
    A.noalias() += k * phia * b * b.transpose();
    c.noalias() += k * phi * b;
  }
  if (support < static_cast<std::size_t>(p))
    throw IllConditionedError("too few points in kernel window");
  const auto sol =
      smoothers::detail::solve_spd_checked(A, c, ridge, condition_limit);
  if (!sol.ok)
    throw IllConditionedError("design condition " +
                              std::to_string(sol.condition));
  Eigen::VectorXd th = sol.theta;
  for (int t = 0; t < p; ++t) {
    int deg = 0;
    for (const int e : basis.exponents[static_cast<std::size_t>(t)]) deg += e;
    th[t] /= std::pow(h, deg);
  }
  return th;
}

}  // namespace cate::learners
