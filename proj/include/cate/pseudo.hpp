#pragma once

namespace cate::pseudo {

//! Clamp a propensity estimate to [eps, 1-eps]. Total and idempotent.
double clip_propensity(double p, double eps);

//! Doubly robust pseudo-outcome
//!   (a - pihat)/(pihat (1-pihat)) * (y - muhat_a) + mu1hat - mu0hat,
//! where muhat_a selects mu1hat when a = 1 and mu0hat otherwise.
//! pihat must already be clipped.
double dr_pseudo(int a, double y, double pihat, double mu0hat, double mu1hat);

//! Inverse-probability-weighted pseudo-outcome (a - pihat) y / (pihat (1-pihat)).
double ipw_pseudo(int a, double y, double pihat);

//! Conditional bias of the DR pseudo-outcome given the fitted nuisances,
//!   (pi/pihat - 1)(mu1 - mu1hat) - ((1-pi)/(1-pihat) - 1)(mu0 - mu0hat).
//! Vanishes when either pihat = pi or both outcome fits are exact.
double error_function_rhat(double pi, double pihat, double mu0, double mu0hat,
                           double mu1, double mu1hat);

//! Same quantity derived independently: enumerate A in {0,1} with weights
//! pi and 1-pi, plug the conditional outcome means into dr_pseudo, subtract
//! the true effect. Simulation diagnostic; agrees with error_function_rhat.
double conditional_bias_oracle(double pi, double pihat, double mu0,
                               double mu0hat, double mu1, double mu1hat);

}  // namespace cate::pseudo
