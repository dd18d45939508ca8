#include "cate/errors.hpp"
#include "cate/smoothers.hpp"

namespace cate::smoothers {

NuisanceFit stage2_regress(const Eigen::VectorXd& pseudo,
                           const Eigen::MatrixXd& x, const Stage2Config& cfg) {
  if (pseudo.size() != x.rows())
    throw ValidationError("stage2_regress: size mismatch");
  switch (cfg.method) {
    case Stage2Method::LocalPoly:
      return local_poly_fit(x, pseudo, Eigen::VectorXd(), cfg.local_poly,
                            NuisanceKind::Generic);
    case Stage2Method::Spline:
      if (x.cols() != 1)
        throw ValidationError("spline second stage needs d = 1");
      return smoothing_spline_fit(x.col(0), pseudo, NuisanceKind::Generic);
    case Stage2Method::Lasso: {
      LassoConfig c = cfg.lasso;
      c.family = LassoConfig::Family::Gaussian;
      return lasso_fit(x, pseudo, c, NuisanceKind::Generic);
    }
  }
  throw ValidationError("unknown second-stage method");
}

}  // namespace cate::smoothers
