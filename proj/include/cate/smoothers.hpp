#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cate/types.hpp"

namespace cate::smoothers {

enum class KernelKind { EpanechnikovProduct, BoxcarProduct };

enum class BandwidthRule {
  Fixed,       // use LocalPolyConfig::bandwidth as given
  CrossValidated,  // k-fold CV over a geometric grid around the rate-optimal order
  RatePreset,  // covariate_range * n^{-1/(2*degree+d)}, deterministic
};

struct LocalPolyConfig {
  int degree = 1;
  double bandwidth = 0.0;
  BandwidthRule bandwidth_rule = BandwidthRule::Fixed;
  KernelKind kernel = KernelKind::EpanechnikovProduct;
  double ridge = 1e-8;  // rescue scale, applied only past the condition limit
  double condition_limit = 1e12;
  int cv_folds = 5;
  int cv_grid = 20;
  std::uint64_t cv_seed = 0;
  double bandwidth_scale = 1.0;  // multiplies the preset/CV-pivot bandwidth
};

struct LassoConfig {
  enum class Family { Gaussian, Logistic };
  std::vector<double> lambda_grid;  // empty: geometric path from lambda_max
  int cv_folds = 5;
  int max_iter = 2000;
  double tol = 1e-8;
  Family family = Family::Gaussian;
  bool standardize = true;
  std::uint64_t cv_seed = 0;
  int path_points = 100;
  double path_min_ratio = 1e-3;
};

//! Multivariate monomials in (X - x) of total degree <= degree, constant
//! term first, graded ordering. p = C(d + degree, d).
struct PolyBasis {
  int dim = 1;
  int degree = 0;
  std::vector<std::vector<int>> exponents;

  static PolyBasis total_degree(int dim, int degree);
  int p() const { return static_cast<int>(exponents.size()); }
  void eval(const XRef& u, Eigen::Ref<Eigen::VectorXd> out) const;
};

struct TuningRecord {
  std::vector<std::pair<std::string, double>> values;
  bool convergence_warning = false;
  std::string note;

  void set(const std::string& key, double v);
  double get(const std::string& key, double fallback = 0.0) const;
};

enum class NuisanceKind {
  Propensity,
  OutcomeMu0,
  OutcomeMu1,
  MarginalEta,
  Generic
};

//! An immutable fitted regression function. Linear smoothers additionally
//! expose their weight vector: evaluate(x) == weights_at(x) . responses.
class NuisanceFit {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    virtual double evaluate(const XRef& x) const = 0;
    virtual bool has_weights() const { return false; }
    virtual Eigen::VectorXd weights_at(const XRef&) const;
    TuningRecord tuning;
  };

  NuisanceFit() = default;
  NuisanceFit(NuisanceKind kind, std::shared_ptr<const Impl> impl)
      : kind_(kind), impl_(std::move(impl)) {}

  double evaluate(const XRef& x) const { return impl_->evaluate(x); }
  double evaluate1(double x) const;
  bool has_weights() const { return impl_ && impl_->has_weights(); }
  Eigen::VectorXd weights_at(const XRef& x) const {
    return impl_->weights_at(x);
  }
  const TuningRecord& tuning() const { return impl_->tuning; }
  NuisanceKind kind() const { return kind_; }
  bool valid() const { return impl_ != nullptr; }

 private:
  NuisanceKind kind_ = NuisanceKind::Generic;
  std::shared_ptr<const Impl> impl_;
};

//! Kernel-weighted polynomial least squares centered at each query point;
//! returns the local intercept. row_weights may be empty (all ones).
//! Throws SingularDesignError at evaluation when the local design cannot be
//! solved (fewer than p support points, or condition past the limit after
//! the ridge rescue).
NuisanceFit local_poly_fit(const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& response,
                           const Eigen::VectorXd& row_weights,
                           const LocalPolyConfig& cfg,
                           NuisanceKind kind = NuisanceKind::Generic);

//! Cubic smoothing spline (1-d) with roughness penalty chosen by GCV.
//! Requires >= 4 distinct abscissae. Linear smoother; reproduces straight
//! lines exactly for every penalty and interpolates as the penalty vanishes.
NuisanceFit smoothing_spline_fit(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y,
                                 NuisanceKind kind = NuisanceKind::Generic);

//! Cross-validation-tuned lasso via coordinate descent with warm starts over
//! a descending lambda path. Gaussian or logistic (IRLS) family.
NuisanceFit lasso_fit(const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& response, const LassoConfig& cfg,
                      NuisanceKind kind = NuisanceKind::Generic);

enum class Stage2Method { LocalPoly, Spline, Lasso };

struct Stage2Config {
  Stage2Method method = Stage2Method::Spline;
  LocalPolyConfig local_poly;
  LassoConfig lasso;
};

//! Second-stage regression of a pseudo-outcome vector on covariates.
NuisanceFit stage2_regress(const Eigen::VectorXd& pseudo,
                           const Eigen::MatrixXd& x, const Stage2Config& cfg);

//! Deterministic rate-order bandwidth: range * n^{-1/(2 degree + d)}.
double preset_bandwidth(const Eigen::MatrixXd& x, int degree, double scale);

}  // namespace cate::smoothers
