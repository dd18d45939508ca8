#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cate/errors.hpp"
#include "cate/simd.hpp"
#include "cate/smoothers.hpp"
#include "cv_folds.hpp"

namespace cate::smoothers {

namespace {

using Family = LassoConfig::Family;

constexpr double kProbClip = 1e-5;

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

double expit_clipped(double v) {
  const double p = 1.0 / (1.0 + std::exp(-v));
  return std::min(1.0 - kProbClip, std::max(kProbClip, p));
}

struct Standardized {
  Eigen::MatrixXd x;       // columns centered/scaled when requested
  Eigen::VectorXd mean, scale;  // scale = 0 marks a dead (constant) column
  bool centered = false;
};

Standardized standardize(const Eigen::MatrixXd& x, bool enable) {
  Standardized s;
  s.x = x;
  const Eigen::Index q = x.cols();
  s.mean = Eigen::VectorXd::Zero(q);
  s.scale = Eigen::VectorXd::Ones(q);
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < q; ++j) {
    const double mu = x.col(j).mean();
    const double var = (x.col(j).array() - mu).square().sum() / n;
    if (var <= 0.0) {
      s.scale[j] = 0.0;  // constant column: coefficient pinned to 0
      if (enable) s.x.col(j).setZero();
      continue;
    }
    if (enable) {
      const double sd = std::sqrt(var);
      s.mean[j] = mu;
      s.scale[j] = sd;
      s.x.col(j) = (x.col(j).array() - mu) / sd;
    }
  }
  s.centered = enable;
  return s;
}

struct PathPoint {
  Eigen::VectorXd beta;  // standardized coordinates
  double intercept = 0.0;
};

struct CdWorkspace {
  Eigen::VectorXd beta;
  Eigen::VectorXd resid;   // gaussian: y - b0 - X beta; logistic: working resid
  double b0 = 0.0;
  int sweeps = 0;
};

// One pass over the given coordinates; returns the largest coefficient move.
double cd_sweep(const Eigen::MatrixXd& x, const Eigen::VectorXd& denom,
                const double* v, double lambda, const std::vector<int>& cols,
                CdWorkspace* ws) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  double max_delta = 0.0;
  for (const int j : cols) {
    if (denom[j] <= 0.0) continue;
    const double* col = x.col(j).data();
    const double grad =
        (v ? simd::dot3(col, v, ws->resid.data(), n)
           : simd::dot(col, ws->resid.data(), n)) /
        static_cast<double>(n);
    const double z = grad + ws->beta[j] * denom[j];
    const double bnew = soft_threshold(z, lambda) / denom[j];
    const double delta = bnew - ws->beta[j];
    if (delta != 0.0) {
      simd::axpy(-delta, col, ws->resid.data(), n);
      ws->beta[j] = bnew;
      max_delta = std::max(max_delta, std::fabs(delta));
    }
  }
  return max_delta;
}

void cd_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& denom,
              const double* v, double vbar, double lambda, bool fit_intercept,
              const LassoConfig& cfg, CdWorkspace* ws, bool* hit_iter_cap) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const Eigen::Index q = x.cols();
  std::vector<int> all_cols(static_cast<std::size_t>(q));
  for (Eigen::Index j = 0; j < q; ++j) all_cols[static_cast<std::size_t>(j)] =
      static_cast<int>(j);
  auto update_intercept = [&]() {
    if (!fit_intercept) return;
    const double num = v ? simd::dot(v, ws->resid.data(), n)
                         : simd::sum(ws->resid.data(), n);
    const double delta = num / (vbar * static_cast<double>(n));
    if (delta != 0.0) {
      ws->b0 += delta;
      ws->resid.array() -= delta;
    }
  };
  while (true) {
    update_intercept();
    const double full_move = cd_sweep(x, denom, v, lambda, all_cols, ws);
    ++ws->sweeps;
    if (ws->sweeps > cfg.max_iter) {
      *hit_iter_cap = true;
      return;
    }
    if (full_move < cfg.tol) return;
    std::vector<int> active;
    for (Eigen::Index j = 0; j < q; ++j)
      if (ws->beta[j] != 0.0) active.push_back(static_cast<int>(j));
    while (true) {
      update_intercept();
      const double move = cd_sweep(x, denom, v, lambda, active, ws);
      ++ws->sweeps;
      if (ws->sweeps > cfg.max_iter) {
        *hit_iter_cap = true;
        return;
      }
      if (move < cfg.tol) break;
    }
  }
}

std::vector<double> make_lambda_grid(double lambda_max,
                                     const LassoConfig& cfg) {
  if (!cfg.lambda_grid.empty()) {
    for (std::size_t i = 0; i + 1 < cfg.lambda_grid.size(); ++i)
      if (!(cfg.lambda_grid[i] > cfg.lambda_grid[i + 1]))
        throw ValidationError("lambda grid must be strictly descending");
    if (cfg.lambda_grid.back() < 0.0)
      throw ValidationError("lambda grid must be non-negative");
    return cfg.lambda_grid;
  }
  const int k = std::max(2, cfg.path_points);
  std::vector<double> grid(static_cast<std::size_t>(k));
  if (lambda_max <= 0.0) lambda_max = 1.0;
  for (int i = 0; i < k; ++i)
    grid[static_cast<std::size_t>(i)] =
        lambda_max * std::pow(cfg.path_min_ratio,
                              static_cast<double>(i) / (k - 1));
  return grid;
}

struct PathResult {
  std::vector<PathPoint> points;
  bool hit_iter_cap = false;
};

PathResult fit_gaussian_path(const Eigen::MatrixXd& xs,
                             const Eigen::VectorXd& y,
                             const Eigen::VectorXd& denom,
                             const std::vector<double>& grid,
                             bool fit_intercept, const LassoConfig& cfg) {
  PathResult out;
  CdWorkspace ws;
  ws.beta = Eigen::VectorXd::Zero(xs.cols());
  ws.b0 = 0.0;
  ws.resid = y;
  for (const double lambda : grid) {
    ws.sweeps = 0;
    bool cap = false;
    cd_solve(xs, denom, nullptr, 1.0, lambda, fit_intercept, cfg, &ws, &cap);
    out.hit_iter_cap |= cap;
    out.points.push_back({ws.beta, ws.b0});
  }
  return out;
}

PathResult fit_logistic_path(const Eigen::MatrixXd& xs,
                             const Eigen::VectorXd& y,
                             const std::vector<double>& grid,
                             const LassoConfig& cfg) {
  PathResult out;
  const Eigen::Index n = xs.rows(), q = xs.cols();
  const double nn = static_cast<double>(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  const double ybar =
      std::min(1.0 - kProbClip, std::max(kProbClip, y.mean()));
  double b0 = std::log(ybar / (1.0 - ybar));
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, b0);
  eta += xs * beta;
  Eigen::VectorXd p(n), v(n), denom(q);
  for (const double lambda : grid) {
    double outer_move = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < 50 && outer_move > cfg.tol * 10.0; ++outer) {
      for (Eigen::Index i = 0; i < n; ++i) {
        p[i] = expit_clipped(eta[i]);
        v[i] = p[i] * (1.0 - p[i]);
      }
      const double vbar = v.mean();
      for (Eigen::Index j = 0; j < q; ++j)
        denom[j] = simd::dot3(xs.col(j).data(), xs.col(j).data(), v.data(),
                              static_cast<std::size_t>(n)) /
                   nn;
      CdWorkspace ws;
      ws.beta = beta;
      ws.b0 = b0;
      // working residual (y - p)/v, kept in sync with coefficient moves
      ws.resid = ((y - p).array() / v.array()).matrix();
      ws.sweeps = 0;
      bool cap = false;
      cd_solve(xs, denom, v.data(), vbar, lambda, true, cfg, &ws, &cap);
      out.hit_iter_cap |= cap;
      outer_move = std::fabs(ws.b0 - b0);
      for (Eigen::Index j = 0; j < q; ++j)
        outer_move = std::max(outer_move, std::fabs(ws.beta[j] - beta[j]));
      // eta = b0 + X beta = working response - residual
      eta.array() += (y - p).array() / v.array() - ws.resid.array();
      beta = ws.beta;
      b0 = ws.b0;
    }
    out.points.push_back({beta, b0});
  }
  return out;
}

PathResult fit_path(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& denom,
                    const std::vector<double>& grid, bool fit_intercept,
                    const LassoConfig& cfg) {
  if (cfg.family == Family::Gaussian)
    return fit_gaussian_path(xs, y, denom, grid, fit_intercept, cfg);
  return fit_logistic_path(xs, y, grid, cfg);
}

// Coefficients mapped back to the original covariate scale.
struct OriginalScale {
  Eigen::VectorXd coef;
  double intercept;
};

OriginalScale to_original(const PathPoint& pt, const Standardized& s) {
  OriginalScale o;
  o.coef = Eigen::VectorXd::Zero(pt.beta.size());
  double shift = 0.0;
  for (Eigen::Index j = 0; j < pt.beta.size(); ++j) {
    if (s.scale[j] == 0.0) continue;
    o.coef[j] = s.centered ? pt.beta[j] / s.scale[j] : pt.beta[j];
    shift += o.coef[j] * s.mean[j];
  }
  o.intercept = pt.intercept - shift;
  return o;
}

class LassoImpl : public NuisanceFit::Impl {
 public:
  LassoImpl(Eigen::VectorXd coef, double intercept, Family family)
      : coef_(std::move(coef)), intercept_(intercept), family_(family) {}

  double evaluate(const XRef& x) const override {
    double eta = intercept_;
    for (Eigen::Index j = 0; j < coef_.size(); ++j) eta += coef_[j] * x[j];
    if (family_ == Family::Logistic) return 1.0 / (1.0 + std::exp(-eta));
    return eta;
  }

 private:
  Eigen::VectorXd coef_;
  double intercept_;
  Family family_;
};

double cv_loss(const Eigen::MatrixXd& x_test, const Eigen::VectorXd& y_test,
               const OriginalScale& fit, Family family) {
  Eigen::VectorXd eta =
      (x_test * fit.coef).array() + fit.intercept;
  if (family == Family::Gaussian) {
    return (y_test - eta).squaredNorm();
  }
  double dev = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double p = expit_clipped(eta[i]);
    dev += -2.0 * (y_test[i] * std::log(p) +
                   (1.0 - y_test[i]) * std::log(1.0 - p));
  }
  return dev;
}

double kkt_gap(const Eigen::MatrixXd& xs, const Eigen::VectorXd& resid_like,
               const Eigen::VectorXd& beta, const Eigen::VectorXd& denom,
               double lambda) {
  const double n = static_cast<double>(xs.rows());
  double gap = 0.0;
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    if (denom[j] <= 0.0) continue;
    const double g = xs.col(j).dot(resid_like) / n;
    if (beta[j] == 0.0)
      gap = std::max(gap, std::max(0.0, std::fabs(g) - lambda));
    else
      gap = std::max(gap, std::fabs(std::fabs(g) - lambda));
  }
  return gap;
}

}  // namespace

NuisanceFit lasso_fit(const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& response, const LassoConfig& cfg,
                      NuisanceKind kind) {
  const Eigen::Index n = design.rows(), q = design.cols();
  if (n != response.size()) throw ValidationError("lasso_fit: size mismatch");
  if (q < 1) throw ValidationError("lasso_fit: needs at least one column");
  if (cfg.family == Family::Logistic)
    for (Eigen::Index i = 0; i < n; ++i)
      if (response[i] != 0.0 && response[i] != 1.0)
        throw ValidationError("logistic lasso needs a 0/1 response");

  const Standardized s = standardize(design, cfg.standardize);
  const double nn = static_cast<double>(n);
  Eigen::VectorXd denom(q);
  for (Eigen::Index j = 0; j < q; ++j)
    denom[j] = s.scale[j] == 0.0 ? 0.0 : s.x.col(j).squaredNorm() / nn;

  // response as the solver sees it; gaussian fits run on centered y
  Eigen::VectorXd y_work = response;
  double y_off = 0.0;
  bool fit_intercept = true;
  if (cfg.family == Family::Gaussian && cfg.standardize) {
    y_off = response.mean();
    y_work.array() -= y_off;
    fit_intercept = false;
  }

  double lambda_max = 0.0;
  {
    const Eigen::VectorXd r0 =
        cfg.family == Family::Gaussian
            ? Eigen::VectorXd(y_work.array() - (fit_intercept ? y_work.mean() : 0.0))
            : Eigen::VectorXd(response.array() - response.mean());
    for (Eigen::Index j = 0; j < q; ++j)
      if (denom[j] > 0.0)
        lambda_max = std::max(lambda_max, std::fabs(s.x.col(j).dot(r0)) / nn);
  }
  const std::vector<double> grid = make_lambda_grid(lambda_max, cfg);

  PathResult full = fit_path(s.x, y_work, denom, grid, fit_intercept, cfg);

  std::size_t selected = 0;
  double cv_min = std::numeric_limits<double>::quiet_NaN();
  if (grid.size() > 1 && cfg.cv_folds >= 2 && n >= cfg.cv_folds) {
    const auto fold_of =
        detail::canonical_cv_folds(design, response, cfg.cv_folds, cfg.cv_seed);
    std::vector<double> loss(grid.size(), 0.0);
    for (int f = 0; f < cfg.cv_folds; ++f) {
      std::vector<Eigen::Index> tr, te;
      for (Eigen::Index i = 0; i < n; ++i)
        (fold_of[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
      if (tr.empty() || te.empty()) continue;
      Eigen::MatrixXd xtr(static_cast<Eigen::Index>(tr.size()), q);
      Eigen::MatrixXd xte(static_cast<Eigen::Index>(te.size()), q);
      Eigen::VectorXd ytr(static_cast<Eigen::Index>(tr.size()));
      Eigen::VectorXd yte(static_cast<Eigen::Index>(te.size()));
      for (std::size_t k = 0; k < tr.size(); ++k) {
        xtr.row(static_cast<Eigen::Index>(k)) = design.row(tr[k]);
        ytr[static_cast<Eigen::Index>(k)] = response[tr[k]];
      }
      for (std::size_t k = 0; k < te.size(); ++k) {
        xte.row(static_cast<Eigen::Index>(k)) = design.row(te[k]);
        yte[static_cast<Eigen::Index>(k)] = response[te[k]];
      }
      const Standardized sf = standardize(xtr, cfg.standardize);
      Eigen::VectorXd denf(q);
      const double ntr = static_cast<double>(xtr.rows());
      for (Eigen::Index j = 0; j < q; ++j)
        denf[j] = sf.scale[j] == 0.0 ? 0.0 : sf.x.col(j).squaredNorm() / ntr;
      Eigen::VectorXd ywf = ytr;
      double yofff = 0.0;
      bool fitf = true;
      if (cfg.family == Family::Gaussian && cfg.standardize) {
        yofff = ytr.mean();
        ywf.array() -= yofff;
        fitf = false;
      }
      PathResult pf = fit_path(sf.x, ywf, denf, grid, fitf, cfg);
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        OriginalScale o = to_original(pf.points[gi], sf);
        o.intercept += yofff;
        loss[gi] += cv_loss(xte, yte, o, cfg.family);
      }
    }
    selected = static_cast<std::size_t>(
        std::min_element(loss.begin(), loss.end()) - loss.begin());
    cv_min = loss[selected] / nn;
  }

  OriginalScale best = to_original(full.points[selected], s);
  best.intercept += y_off;

  // KKT residual at the returned solution, in solver coordinates
  Eigen::VectorXd resid_like;
  if (cfg.family == Family::Gaussian) {
    resid_like = y_work - s.x * full.points[selected].beta;
    if (fit_intercept) resid_like.array() -= full.points[selected].intercept;
  } else {
    Eigen::VectorXd eta =
        (s.x * full.points[selected].beta).array() +
        full.points[selected].intercept;
    resid_like.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      resid_like[i] = response[i] - expit_clipped(eta[i]);
  }
  const double gap = kkt_gap(s.x, resid_like, full.points[selected].beta,
                             denom, grid[selected]);

  auto impl =
      std::make_shared<LassoImpl>(best.coef, best.intercept, cfg.family);
  impl->tuning.set("lambda", grid[selected]);
  impl->tuning.set("lambda_max", lambda_max);
  impl->tuning.set("nonzero",
                   static_cast<double>(
                       (full.points[selected].beta.array() != 0.0).count()));
  impl->tuning.set("kkt_gap", gap);
  if (!std::isnan(cv_min)) impl->tuning.set("cv_loss", cv_min);
  if (full.hit_iter_cap || gap > std::max(cfg.tol * 100.0, 1e-6)) {
    impl->tuning.convergence_warning = true;
    impl->tuning.note = "coordinate descent stopped with KKT residual " +
                        std::to_string(gap);
  }
  return NuisanceFit(kind, std::move(impl));
}

}  // namespace cate::smoothers
