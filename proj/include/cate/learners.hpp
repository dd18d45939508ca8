#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "cate/data.hpp"
#include "cate/dgp.hpp"
#include "cate/smoothers.hpp"
#include "cate/types.hpp"

namespace cate::learners {

enum class LearnerKind { T, X, Ipw, Dr, OracleDr, LpR };

const char* learner_name(LearnerKind kind);

enum class NuisanceMethod {
  Spline,          // 1-d smoothing spline on the raw response
  LocalPoly,       // local polynomial regression
  LassoGaussian,   // CV lasso, squared error
  LassoLogistic,   // CV lasso, deviance
  TrueFunction,    // ground truth from the DGP (simulation only)
  RateControlled,  // truth perturbed at a controlled error rate (propensity)
};

struct NuisanceSpec {
  NuisanceMethod method = NuisanceMethod::Spline;
  smoothers::LocalPolyConfig local_poly;
  smoothers::LassoConfig lasso;
  double rate_alpha = 0.25;  // RateControlled: RMSE order n^-alpha
  double rate_n = 0.0;       // sample size in the rate; 0 = training fold size
};

//! Simulation context: ground truth for oracle/device nuisances and the seed
//! of the rate-controlled perturbation field.
struct FitContext {
  const dgp::Truth* truth = nullptr;
  std::uint64_t seed = 0;
};

enum class CrossfitMode { SingleSplit, Averaged3 };

//! A fitted CATE function. Deterministic given the fit; per-query failures
//! (no usable local design) surface as exceptions from evaluate or as
//! nullopt from try_evaluate.
class CateFit {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    virtual double evaluate(const XRef& x) const = 0;
  };

  CateFit() = default;
  CateFit(LearnerKind learner, CrossfitMode crossfit,
          std::vector<std::shared_ptr<const Impl>> parts,
          smoothers::TuningRecord tuning)
      : learner_(learner),
        crossfit_(crossfit),
        parts_(std::move(parts)),
        tuning_(std::move(tuning)) {}

  double evaluate(const XRef& x) const;
  double evaluate1(double x) const;
  std::optional<double> try_evaluate(const XRef& x) const;

  LearnerKind learner() const { return learner_; }
  CrossfitMode crossfit() const { return crossfit_; }
  const smoothers::TuningRecord& tuning() const { return tuning_; }
  bool valid() const { return !parts_.empty(); }

 private:
  LearnerKind learner_ = LearnerKind::T;
  CrossfitMode crossfit_ = CrossfitMode::SingleSplit;
  std::vector<std::shared_ptr<const Impl>> parts_;
  smoothers::TuningRecord tuning_;
};

struct DrLearnerConfig {
  NuisanceSpec propensity;
  NuisanceSpec outcome;
  smoothers::Stage2Config stage2;
  double clip_eps = 0.01;
  bool crossfit = false;
};

struct LpRConfig {
  double gamma = 1.0;        // basis degree = floor(gamma)
  double h = 0.0;            // <= 0: rate preset n^{-1/(2 gamma + d)}
  double k_equivalent = 0.0; // <= 0: n / log^2 n; drives nuisance bandwidth
  double h_scale = 1.0;      // multiplies covariate range in the preset
  smoothers::KernelKind kernel = smoothers::KernelKind::EpanechnikovProduct;
  NuisanceSpec nuisance;     // shared by pihat_a, pihat_b, etahat
  double ridge = 1e-8;
  double condition_limit = 1e12;
  double clip_eps = 0.01;
  bool crossfit = false;
};

//! Plug-in difference of per-arm outcome regressions fit on D1B.
CateFit fit_t_learner(const ObservationTable& data, const FoldAssignment& folds,
                      const NuisanceSpec& outcome, const FitContext& ctx = {});

//! X-Learner: imputed-effect regressions on the D2 arms combined with the
//! clipped propensity weight.
CateFit fit_x_learner(const ObservationTable& data, const FoldAssignment& folds,
                      const NuisanceSpec& outcome,
                      const NuisanceSpec& propensity,
                      const smoothers::Stage2Config& stage2, double clip_eps,
                      const FitContext& ctx = {});

//! Second-stage regression of the IPW pseudo-outcome on D2.
CateFit fit_ipw_learner(const ObservationTable& data,
                        const FoldAssignment& folds,
                        const NuisanceSpec& propensity,
                        const smoothers::Stage2Config& stage2, double clip_eps,
                        const FitContext& ctx = {});

//! DR-Learner: propensity from D1A, outcome regressions from D1B, doubly
//! robust pseudo-outcome regressed on covariates over D2. With crossfit the
//! three role rotations are averaged pointwise.
CateFit fit_dr_learner(const ObservationTable& data,
                       const FoldAssignment& folds, const DrLearnerConfig& cfg,
                       const FitContext& ctx = {});

//! DR-Learner fed the true pseudo-outcome (simulation benchmark).
CateFit fit_oracle_dr_learner(const ObservationTable& data,
                              const FoldAssignment& folds,
                              const smoothers::Stage2Config& stage2,
                              const FitContext& ctx, bool crossfit = false);

//! Local-polynomial double-residual regression with ratio weights and
//! three-way splitting. Per-query ILL_CONDITIONED failures are reported via
//! try_evaluate.
CateFit fit_lp_r_learner(const ObservationTable& data,
                         const FoldAssignment& folds, const LpRConfig& cfg,
                         const FitContext& ctx = {});

struct LpRPreset {
  double h = 0.0;
  double k = 0.0;
};

//! h ~ n^{-1/(2 gamma + d)}, k ~ n / log^2 n.
LpRPreset cor3_preset(std::size_t n, double gamma, int d, double scale = 1.0);

//! h ~ n^{-3s/(2 s gamma + (s+gamma) d)}, k ~ n^{3 gamma d / 2 / (2 s gamma + (s+gamma) d)}.
LpRPreset cor4_preset(std::size_t n, double gamma, double s, int d,
                      double scale_h = 1.0, double scale_k = 1.0);

//! Sample design matrix of the localized residual regression at one query,
//! with unscaled basis b(X - x) and kernel K_hx = h^-d K((X-x)/h). Passing
//! the true conditional treatment variance as weights gives the diagnostic
//! variant used when the DGP is known.
struct QMatrices {
  Eigen::MatrixXd qhat;
  double min_eigenvalue = 0.0;
  double condition = 0.0;
  bool ill_conditioned = false;
};

QMatrices lp_r_q_matrix(const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& weights, const XRef& query,
                        double h, int degree, smoothers::KernelKind kernel,
                        double condition_limit = 1e12);

//! Full coefficient vector of the localized residual regression at one
//! query, in the b(X - x) coordinates; the first entry is the effect
//! estimate. Throws IllConditionedError on unusable designs.
Eigen::VectorXd lp_r_local_theta(const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& pia,
                                 const Eigen::VectorXd& pib,
                                 const Eigen::VectorXd& eta, const XRef& query,
                                 double h, int degree,
                                 smoothers::KernelKind kernel,
                                 double ridge = 1e-8,
                                 double condition_limit = 1e12);

}  // namespace cate::learners
