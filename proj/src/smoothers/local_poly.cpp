#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "cate/errors.hpp"
#include "cate/rng.hpp"
#include "cate/simd.hpp"
#include "cate/smoothers.hpp"
#include "cv_folds.hpp"
#include "local_solve.hpp"

namespace cate::smoothers {

namespace detail {

void sym_eig_range(const Eigen::MatrixXd& A, double* min_eig, double* max_eig) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A,
                                                    Eigen::EigenvaluesOnly);
  *min_eig = es.eigenvalues().minCoeff();
  *max_eig = es.eigenvalues().maxCoeff();
}

SpdSolveResult solve_spd_checked(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& rhs,
                                 double ridge_scale, double cond_limit) {
  SpdSolveResult res;
  if (!A.allFinite() || !rhs.allFinite()) return res;
  sym_eig_range(A, &res.min_eig, &res.max_eig);
  res.condition = res.min_eig > 0.0
                      ? res.max_eig / res.min_eig
                      : std::numeric_limits<double>::infinity();
  if (res.condition <= cond_limit) {
    res.theta = A.ldlt().solve(rhs);
    res.ok = res.theta.allFinite();
    return res;
  }
  const double delta =
      ridge_scale * A.trace() / static_cast<double>(A.rows());
  if (!(delta > 0.0)) return res;
  Eigen::MatrixXd Ar = A;
  Ar.diagonal().array() += delta;
  double lo, hi;
  sym_eig_range(Ar, &lo, &hi);
  const double cond_r =
      lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  res.condition = std::min(res.condition, cond_r);
  if (cond_r > cond_limit) return res;
  res.used_ridge = true;
  res.theta = Ar.ldlt().solve(rhs);
  res.ok = res.theta.allFinite();
  return res;
}

}  // namespace detail

namespace {

struct SortedColumn {
  std::vector<double> x, resp, roww, wresp;
  std::vector<Eigen::Index> order;  // sorted position -> original row
};

// Window of rows with nonzero kernel weight around q. For the Epanechnikov
// kernel the boundary itself carries weight zero, so support is strict.
struct Window {
  std::size_t lo, hi;        // rows to feed the moment kernels
  std::size_t support;       // rows with strictly positive weight
};

Window find_window(const std::vector<double>& xs, double q, double h,
                   bool boxcar) {
  Window w{};
  const auto lo_it = std::lower_bound(xs.begin(), xs.end(), q - h);
  const auto hi_it = std::upper_bound(xs.begin(), xs.end(), q + h);
  w.lo = static_cast<std::size_t>(lo_it - xs.begin());
  w.hi = static_cast<std::size_t>(hi_it - xs.begin());
  if (boxcar) {
    w.support = w.hi - w.lo;
  } else {
    const auto lo_s = std::upper_bound(xs.begin(), xs.end(), q - h);
    const auto hi_s = std::lower_bound(xs.begin(), xs.end(), q + h);
    w.support = static_cast<std::size_t>(
        std::max<std::ptrdiff_t>(0, hi_s - lo_s));
  }
  return w;
}

std::string point_str(const XRef& q) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index j = 0; j < q.size(); ++j)
    os << (j ? ", " : "") << q[j];
  os << ")";
  return os.str();
}

class LocalPolyImpl : public NuisanceFit::Impl {
 public:
  LocalPolyImpl(Eigen::MatrixXd x, Eigen::VectorXd resp,
                Eigen::VectorXd row_w, LocalPolyConfig cfg)
      : x_(std::move(x)),
        resp_(std::move(resp)),
        row_w_(std::move(row_w)),
        cfg_(std::move(cfg)),
        basis_(PolyBasis::total_degree(static_cast<int>(x_.cols()),
                                       cfg_.degree)) {
    weighted_ = row_w_.size() > 0 && (row_w_.array() != 1.0).any();
    fast1d_ = x_.cols() == 1 && cfg_.degree <= 2;
    if (fast1d_) {
      const std::size_t n = static_cast<std::size_t>(x_.rows());
      sorted_.order.resize(n);
      std::iota(sorted_.order.begin(), sorted_.order.end(), Eigen::Index{0});
      std::sort(sorted_.order.begin(), sorted_.order.end(),
                [&](Eigen::Index a, Eigen::Index b) {
                  return x_(a, 0) < x_(b, 0);
                });
      sorted_.x.resize(n);
      sorted_.resp.resize(n);
      sorted_.roww.resize(n);
      sorted_.wresp.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const Eigen::Index i = sorted_.order[k];
        sorted_.x[k] = x_(i, 0);
        sorted_.resp[k] = resp_[i];
        sorted_.roww[k] = row_w_.size() ? row_w_[i] : 1.0;
        sorted_.wresp[k] = sorted_.roww[k] * sorted_.resp[k];
      }
    }
  }

  double evaluate(const XRef& q) const override {
    const auto sol = solve_at(q);
    return sol.theta[0];
  }

  bool has_weights() const override { return true; }

  Eigen::VectorXd weights_at(const XRef& q) const override {
    // generic accumulation; mirrors the solve used by evaluate
    const Eigen::Index n = x_.rows();
    const int p = basis_.p();
    Eigen::VectorXd kw = kernel_weights(q);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd b(p);
    Eigen::VectorXd u(x_.cols());
    Eigen::MatrixXd bs(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (kw[i] == 0.0) {
        bs.row(i).setZero();
        continue;
      }
      u = (x_.row(i).transpose() - q) / cfg_.bandwidth;
      basis_.eval(u, b);
      bs.row(i) = b;
      A.noalias() += kw[i] * b * b.transpose();
    }
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(p);
    e0[0] = 1.0;
    const auto sol = detail::solve_spd_checked(A, e0, cfg_.ridge,
                                               cfg_.condition_limit);
    if (!sol.ok)
      throw SingularDesignError("singular local design at query " +
                                point_str(q));
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
      w[i] = kw[i] == 0.0 ? 0.0 : kw[i] * sol.theta.dot(bs.row(i));
    return w;
  }

 private:
  detail::SpdSolveResult solve_at(const XRef& q) const {
    const int p = basis_.p();
    Eigen::MatrixXd A(p, p);
    Eigen::VectorXd c(p);
    std::size_t support = 0;
    if (fast1d_) {
      const bool boxcar = cfg_.kernel == KernelKind::BoxcarProduct;
      const auto win =
          find_window(sorted_.x, q[0], cfg_.bandwidth, boxcar);
      support = win.support;
      if (support >= static_cast<std::size_t>(p)) {
        simd::Moments1d m;
        const std::size_t len = win.hi - win.lo;
        if (weighted_) {
          simd::lpr1d_moments(sorted_.x.data() + win.lo,
                              sorted_.roww.data() + win.lo,
                              sorted_.wresp.data() + win.lo, len, q[0],
                              1.0 / cfg_.bandwidth, boxcar, &m);
        } else {
          simd::lp1d_moments(sorted_.x.data() + win.lo,
                             sorted_.resp.data() + win.lo, len, q[0],
                             1.0 / cfg_.bandwidth, boxcar, &m);
        }
        for (int j = 0; j < p; ++j) {
          for (int k = 0; k < p; ++k) A(j, k) = m.s[j + k];
          c[j] = m.t[j];
        }
      }
    } else {
      const Eigen::VectorXd kw = kernel_weights(q);
      A.setZero();
      c.setZero();
      Eigen::VectorXd u(x_.cols());
      Eigen::VectorXd b(p);
      for (Eigen::Index i = 0; i < x_.rows(); ++i) {
        if (kw[i] == 0.0) continue;
        ++support;
        u = (x_.row(i).transpose() - q) / cfg_.bandwidth;
        basis_.eval(u, b);
        A.noalias() += kw[i] * b * b.transpose();
        c.noalias() += kw[i] * resp_[i] * b;
      }
    }
    if (support < static_cast<std::size_t>(p))
      throw SingularDesignError(
          "local design at query " + point_str(q) + ": " +
          std::to_string(support) + " support points for basis size " +
          std::to_string(p));
    const auto sol =
        detail::solve_spd_checked(A, c, cfg_.ridge, cfg_.condition_limit);
    if (!sol.ok)
      throw SingularDesignError("singular local design at query " +
                                point_str(q) + " (condition " +
                                std::to_string(sol.condition) + ")");
    return sol;
  }

  Eigen::VectorXd kernel_weights(const XRef& q) const {
    const Eigen::Index n = x_.rows();
    Eigen::VectorXd w(n);
    const double inv_h = 1.0 / cfg_.bandwidth;
    const bool boxcar = cfg_.kernel == KernelKind::BoxcarProduct;
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
    if (row_w_.size()) w.array() *= row_w_.array();
    return w;
  }

  Eigen::MatrixXd x_;
  Eigen::VectorXd resp_;
  Eigen::VectorXd row_w_;
  LocalPolyConfig cfg_;
  PolyBasis basis_;
  bool fast1d_ = false;
  bool weighted_ = false;
  SortedColumn sorted_;
};

double cv_bandwidth(const Eigen::MatrixXd& x, const Eigen::VectorXd& resp,
                    const Eigen::VectorXd& row_w, const LocalPolyConfig& cfg) {
  const double pivot = preset_bandwidth(x, cfg.degree, cfg.bandwidth_scale);
  const int g = std::max(2, cfg.cv_grid);
  std::vector<double> grid(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i)
    grid[static_cast<std::size_t>(i)] =
        pivot / 4.0 * std::pow(16.0, static_cast<double>(i) / (g - 1));

  const int folds = std::max(2, cfg.cv_folds);
  const auto fold_of = detail::canonical_cv_folds(x, resp, folds, cfg.cv_seed);
  const Eigen::Index n = x.rows();

  std::vector<double> sq_err(grid.size(), 0.0);
  std::vector<std::size_t> failures(grid.size(), 0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    if (train.empty() || test.empty()) continue;
    Eigen::MatrixXd xt(static_cast<Eigen::Index>(train.size()), x.cols());
    Eigen::VectorXd rt(static_cast<Eigen::Index>(train.size()));
    Eigen::VectorXd wt(row_w.size() ? static_cast<Eigen::Index>(train.size())
                                    : 0);
    for (std::size_t k = 0; k < train.size(); ++k) {
      xt.row(static_cast<Eigen::Index>(k)) = x.row(train[k]);
      rt[static_cast<Eigen::Index>(k)] = resp[train[k]];
      if (row_w.size()) wt[static_cast<Eigen::Index>(k)] = row_w[train[k]];
    }
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      LocalPolyConfig c = cfg;
      c.bandwidth = grid[gi];
      c.bandwidth_rule = BandwidthRule::Fixed;
      LocalPolyImpl fit(xt, rt, wt, c);
      for (const Eigen::Index i : test) {
        try {
          const double pred = fit.evaluate(x.row(i).transpose());
          const double e = pred - resp[i];
          sq_err[gi] += e * e;
        } catch (const SingularDesignError&) {
          ++failures[gi];
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi) {
    if (failures[gi] < failures[best] ||
        (failures[gi] == failures[best] && sq_err[gi] < sq_err[best]))
      best = gi;
  }
  return grid[best];
}

}  // namespace

NuisanceFit local_poly_fit(const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& response,
                           const Eigen::VectorXd& row_weights,
                           const LocalPolyConfig& cfg, NuisanceKind kind) {
  if (x.rows() != response.size())
    throw ValidationError("local_poly_fit: row count mismatch");
  if (row_weights.size() && row_weights.size() != x.rows())
    throw ValidationError("local_poly_fit: weight length mismatch");
  if (cfg.degree < 0) throw ValidationError("degree must be >= 0");

  LocalPolyConfig eff = cfg;
  switch (cfg.bandwidth_rule) {
    case BandwidthRule::Fixed:
      if (!(cfg.bandwidth > 0.0))
        throw ValidationError("bandwidth must be positive");
      break;
    case BandwidthRule::RatePreset:
      eff.bandwidth = preset_bandwidth(x, cfg.degree, cfg.bandwidth_scale);
      break;
    case BandwidthRule::CrossValidated:
      eff.bandwidth = cv_bandwidth(x, response, row_weights, cfg);
      break;
  }
  eff.bandwidth_rule = BandwidthRule::Fixed;

  auto impl = std::make_shared<LocalPolyImpl>(x, response, row_weights, eff);
  impl->tuning.set("bandwidth", eff.bandwidth);
  impl->tuning.set("degree", eff.degree);
  impl->tuning.set("kernel",
                   eff.kernel == KernelKind::BoxcarProduct ? 1.0 : 0.0);
  return NuisanceFit(kind, std::move(impl));
}

}  // namespace cate::smoothers
