#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cate/errors.hpp"
#include "cate/smoothers.hpp"

namespace cate::smoothers {

namespace {

// Natural cubic smoothing spline in the Reinsch formulation. With knot
// values f and interior second derivatives g,
//   (R + lambda Q' W^-1 Q) g = Q' ybar,   f = ybar - lambda W^-1 Q g,
// where Q (m x M, M = m-2) holds second-difference coefficients and R the
// roughness Gram matrix; both are banded, so every solve is O(m).
struct SplineCore {
  std::vector<double> t, h, w, ybar;
  std::vector<double> r0, r1;        // R bands
  std::vector<double> g0, g1, g2;    // Q' W^-1 Q bands
  std::size_t m = 0, M = 0;

  void build(const std::vector<double>& ts, const std::vector<double>& ws,
             const std::vector<double>& ys) {
    t = ts;
    w = ws;
    ybar = ys;
    m = t.size();
    M = m - 2;
    h.resize(m - 1);
    for (std::size_t j = 0; j + 1 < m; ++j) h[j] = t[j + 1] - t[j];
    r0.assign(M, 0.0);
    r1.assign(M > 0 ? M - 1 : 0, 0.0);
    for (std::size_t k = 0; k < M; ++k) {
      r0[k] = (h[k] + h[k + 1]) / 3.0;
      if (k + 1 < M) r1[k] = h[k + 1] / 6.0;
    }
    g0.assign(M, 0.0);
    g1.assign(M > 0 ? M - 1 : 0, 0.0);
    g2.assign(M > 1 ? M - 2 : 0, 0.0);
    for (std::size_t k = 0; k < M; ++k) {
      const double qk = 1.0 / h[k];
      const double qk1 = -1.0 / h[k] - 1.0 / h[k + 1];
      const double qk2 = 1.0 / h[k + 1];
      g0[k] = qk * qk / w[k] + qk1 * qk1 / w[k + 1] + qk2 * qk2 / w[k + 2];
      if (k + 1 < M) {
        const double q1k1 = 1.0 / h[k + 1];
        const double q1k2 = -1.0 / h[k + 1] - 1.0 / h[k + 2];
        g1[k] = qk1 * q1k1 / w[k + 1] + qk2 * q1k2 / w[k + 2];
      }
      if (k + 2 < M) g2[k] = qk2 * (1.0 / h[k + 2]) / w[k + 2];
    }
  }

  // y -> Q' y  (length m -> M)
  std::vector<double> qt_apply(const std::vector<double>& v) const {
    std::vector<double> out(M);
    for (std::size_t k = 0; k < M; ++k)
      out[k] = v[k] / h[k] - v[k + 1] * (1.0 / h[k] + 1.0 / h[k + 1]) +
               v[k + 2] / h[k + 1];
    return out;
  }

  // z -> Q z  (length M -> m)
  std::vector<double> q_apply(const std::vector<double>& z) const {
    std::vector<double> out(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      double v = 0.0;
      if (j < M) v += z[j] / h[j];
      if (j >= 1 && j - 1 < M) v -= z[j - 1] * (1.0 / h[j - 1] + 1.0 / h[j]);
      if (j >= 2 && j - 2 < M) v += z[j - 2] / h[j - 1];
      out[j] = v;
    }
    return out;
  }
};

// LDL' factorization of a symmetric pentadiagonal matrix.
struct BandFactor {
  std::vector<double> d, l1, l2;

  void factor(const std::vector<double>& b0, const std::vector<double>& b1,
              const std::vector<double>& b2) {
    const std::size_t M = b0.size();
    d.assign(M, 0.0);
    l1.assign(M > 0 ? M - 1 : 0, 0.0);
    l2.assign(M > 1 ? M - 2 : 0, 0.0);
    for (std::size_t k = 0; k < M; ++k) {
      double a0 = b0[k];
      if (k >= 1) a0 -= d[k - 1] * l1[k - 1] * l1[k - 1];
      if (k >= 2) a0 -= d[k - 2] * l2[k - 2] * l2[k - 2];
      d[k] = a0;
      if (k + 1 < M) {
        double a1 = b1[k];
        if (k >= 1) a1 -= d[k - 1] * l1[k - 1] * l2[k - 1];
        l1[k] = a1 / d[k];
      }
      if (k + 2 < M) l2[k] = b2[k] / d[k];
    }
  }

  std::vector<double> solve(std::vector<double> rhs) const {
    const std::size_t M = d.size();
    for (std::size_t k = 0; k < M; ++k) {
      if (k >= 1) rhs[k] -= l1[k - 1] * rhs[k - 1];
      if (k >= 2) rhs[k] -= l2[k - 2] * rhs[k - 2];
    }
    for (std::size_t k = 0; k < M; ++k) rhs[k] /= d[k];
    for (std::size_t k = M; k-- > 0;) {
      if (k + 1 < M) rhs[k] -= l1[k] * rhs[k + 1];
      if (k + 2 < M) rhs[k] -= l2[k] * rhs[k + 2];
    }
    return rhs;
  }

  // Central bands of the inverse (Takahashi recursion).
  void inverse_bands(std::vector<double>* s0, std::vector<double>* s1,
                     std::vector<double>* s2) const {
    const std::size_t M = d.size();
    s0->assign(M, 0.0);
    s1->assign(M > 0 ? M - 1 : 0, 0.0);
    s2->assign(M > 1 ? M - 2 : 0, 0.0);
    for (std::size_t k = M; k-- > 0;) {
      if (k + 2 < M)
        (*s2)[k] = -(l1[k] * (*s1)[k + 1] + l2[k] * (*s0)[k + 2]);
      if (k + 1 < M) {
        double v = -l1[k] * (*s0)[k + 1];
        if (k + 2 < M) v -= l2[k] * (*s1)[k + 1];
        (*s1)[k] = v;
      }
      double v = 1.0 / d[k];
      if (k + 1 < M) v -= l1[k] * (*s1)[k];
      if (k + 2 < M) v -= l2[k] * (*s2)[k];
      (*s0)[k] = v;
    }
  }
};

struct FitAtLambda {
  std::vector<double> f, g_int;
  double rss_w = 0.0;
  double trace = 0.0;
  BandFactor factor;
};

FitAtLambda fit_lambda(const SplineCore& core, double lambda,
                       bool want_trace) {
  FitAtLambda out;
  const std::size_t M = core.M;
  std::vector<double> b0(M), b1(M > 0 ? M - 1 : 0), b2(M > 1 ? M - 2 : 0);
  for (std::size_t k = 0; k < M; ++k) b0[k] = core.r0[k] + lambda * core.g0[k];
  for (std::size_t k = 0; k + 1 < M; ++k)
    b1[k] = core.r1[k] + lambda * core.g1[k];
  for (std::size_t k = 0; k + 2 < M; ++k) b2[k] = lambda * core.g2[k];
  out.factor.factor(b0, b1, b2);
  out.g_int = out.factor.solve(core.qt_apply(core.ybar));
  const auto qg = core.q_apply(out.g_int);
  out.f.resize(core.m);
  out.rss_w = 0.0;
  for (std::size_t j = 0; j < core.m; ++j) {
    const double resid = lambda * qg[j] / core.w[j];
    out.f[j] = core.ybar[j] - resid;
    out.rss_w += core.w[j] * resid * resid;
  }
  if (want_trace) {
    std::vector<double> s0, s1, s2;
    out.factor.inverse_bands(&s0, &s1, &s2);
    double tr = 0.0;
    for (std::size_t k = 0; k < M; ++k) tr += s0[k] * core.g0[k];
    for (std::size_t k = 0; k + 1 < M; ++k) tr += 2.0 * s1[k] * core.g1[k];
    for (std::size_t k = 0; k + 2 < M; ++k) tr += 2.0 * s2[k] * core.g2[k];
    out.trace = static_cast<double>(core.m) - lambda * tr;
  }
  return out;
}

double gcv_score(const SplineCore& core, double lambda) {
  const auto fit = fit_lambda(core, lambda, true);
  const double m = static_cast<double>(core.m);
  const double denom = 1.0 - fit.trace / m;
  if (denom <= 1e-10) return std::numeric_limits<double>::infinity();
  return (fit.rss_w / m) / (denom * denom);
}

class SplineImpl : public NuisanceFit::Impl {
 public:
  SplineImpl(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.size();
    n_train_ = n;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
    std::vector<double> ts, ws, ys;
    knot_of_row_.resize(static_cast<std::size_t>(n));
    for (const Eigen::Index i : order) {
      if (!ts.empty() && x[i] == ts.back()) {
        ws.back() += 1.0;
        ys.back() += y[i];
      } else {
        ts.push_back(x[i]);
        ws.push_back(1.0);
        ys.push_back(y[i]);
      }
      knot_of_row_[static_cast<std::size_t>(i)] =
          static_cast<Eigen::Index>(ts.size()) - 1;
    }
    if (ts.size() < 4)
      throw ValidationError("smoothing spline needs >= 4 distinct x values");
    for (std::size_t j = 0; j < ts.size(); ++j) ys[j] /= ws[j];
    core_.build(ts, ws, ys);

    // GCV over a generous multiplicative grid around the natural scale,
    // then a golden-section refinement.
    double tr_r = 0.0, tr_g = 0.0;
    for (std::size_t k = 0; k < core_.M; ++k) {
      tr_r += core_.r0[k];
      tr_g += core_.g0[k];
    }
    const double ratio0 = tr_r / tr_g;
    auto lambda_of = [ratio0](double s) {
      return ratio0 * std::pow(256.0, 3.0 * s - 1.0);
    };
    const int grid_n = 31;
    double best_s = -1.5, best_gcv = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_n; ++i) {
      const double s = -1.5 + 3.0 * i / (grid_n - 1);
      const double gcv = gcv_score(core_, lambda_of(s));
      if (gcv < best_gcv) {
        best_gcv = gcv;
        best_s = s;
      }
    }
    const double step = 3.0 / (grid_n - 1);
    double lo = best_s - step, hi = best_s + step;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = gcv_score(core_, lambda_of(c));
    double fd = gcv_score(core_, lambda_of(d));
    for (int it = 0; it < 40; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = gcv_score(core_, lambda_of(c));
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = gcv_score(core_, lambda_of(d));
      }
    }
    const double s_star = fc < fd ? c : d;
    if (std::min(fc, fd) < best_gcv) best_s = s_star;
    lambda_ = lambda_of(best_s);
    fit_ = fit_lambda(core_, lambda_, true);
    tuning.set("lambda", lambda_);
    tuning.set("gcv_df", fit_.trace);
  }

  double evaluate(const XRef& q) const override { return value_at(q[0]); }

  bool has_weights() const override { return true; }

  Eigen::VectorXd weights_at(const XRef& q) const override {
    std::vector<double> c(core_.m, 0.0), dg(core_.m, 0.0);
    functional_at(q[0], &c, &dg);
    // f(q) = c'f + dg'g = (c + Q B^-1 (dg_int - lambda Q'W^-1 c))' ybar
    std::vector<double> wc(core_.m);
    for (std::size_t j = 0; j < core_.m; ++j) wc[j] = c[j] / core_.w[j];
    auto rhs = core_.qt_apply(wc);
    for (std::size_t k = 0; k < core_.M; ++k)
      rhs[k] = dg[k + 1] - lambda_ * rhs[k];
    const auto z = fit_.factor.solve(rhs);
    auto v = core_.q_apply(z);
    for (std::size_t j = 0; j < core_.m; ++j) v[j] += c[j];
    Eigen::VectorXd out(n_train_);
    for (Eigen::Index i = 0; i < n_train_; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(knot_of_row_[static_cast<std::size_t>(i)]);
      out[i] = v[j] / core_.w[j];
    }
    return out;
  }

 private:
  double g_full(std::size_t j) const {
    if (j == 0 || j + 1 == core_.m) return 0.0;
    return fit_.g_int[j - 1];
  }

  double value_at(double q) const {
    const auto& t = core_.t;
    const auto& f = fit_.f;
    const std::size_t m = core_.m;
    if (q <= t.front()) {
      const double h = core_.h[0];
      const double slope = (f[1] - f[0]) / h - h * g_full(1) / 6.0;
      return f[0] + (q - t[0]) * slope;
    }
    if (q >= t.back()) {
      const double h = core_.h[m - 2];
      const double slope =
          (f[m - 1] - f[m - 2]) / h + h * g_full(m - 2) / 6.0;
      return f[m - 1] + (q - t[m - 1]) * slope;
    }
    const std::size_t j = static_cast<std::size_t>(
        std::upper_bound(t.begin(), t.end(), q) - t.begin() - 1);
    const double h = core_.h[j];
    const double dl = q - t[j], dr = t[j + 1] - q;
    const double gj = g_full(j), gj1 = g_full(j + 1);
    return gj * dr * dr * dr / (6.0 * h) + gj1 * dl * dl * dl / (6.0 * h) +
           (f[j] / h - gj * h / 6.0) * dr + (f[j + 1] / h - gj1 * h / 6.0) * dl;
  }

  void functional_at(double q, std::vector<double>* c,
                     std::vector<double>* dg) const {
    const auto& t = core_.t;
    const std::size_t m = core_.m;
    if (q <= t.front()) {
      const double h = core_.h[0];
      const double r = (q - t[0]) / h;
      (*c)[0] = 1.0 - r;
      (*c)[1] = r;
      (*dg)[1] = -(q - t[0]) * h / 6.0;
      return;
    }
    if (q >= t.back()) {
      const double h = core_.h[m - 2];
      const double r = (q - t[m - 1]) / h;
      (*c)[m - 1] = 1.0 + r;
      (*c)[m - 2] = -r;
      (*dg)[m - 2] = (q - t[m - 1]) * h / 6.0;
      return;
    }
    const std::size_t j = static_cast<std::size_t>(
        std::upper_bound(t.begin(), t.end(), q) - t.begin() - 1);
    const double h = core_.h[j];
    const double dl = q - t[j], dr = t[j + 1] - q;
    (*c)[j] = dr / h;
    (*c)[j + 1] = dl / h;
    (*dg)[j] = dr * dr * dr / (6.0 * h) - h * dr / 6.0;
    (*dg)[j + 1] = dl * dl * dl / (6.0 * h) - h * dl / 6.0;
  }

  SplineCore core_;
  FitAtLambda fit_;
  double lambda_ = 0.0;
  Eigen::Index n_train_ = 0;
  std::vector<Eigen::Index> knot_of_row_;
};

}  // namespace

NuisanceFit smoothing_spline_fit(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y, NuisanceKind kind) {
  if (x.size() != y.size())
    throw ValidationError("smoothing_spline_fit: length mismatch");
  auto impl = std::make_shared<SplineImpl>(x, y);
  return NuisanceFit(kind, std::move(impl));
}

}  // namespace cate::smoothers
