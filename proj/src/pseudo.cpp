#include "cate/pseudo.hpp"

namespace cate::pseudo {

double clip_propensity(double p, double eps) {
  const double hi = 1.0 - eps;
  if (p < eps) return eps;
  if (p > hi) return hi;
  return p;
}

double dr_pseudo(int a, double y, double pihat, double mu0hat, double mu1hat) {
  const double mua = a == 1 ? mu1hat : mu0hat;
  return (a - pihat) / (pihat * (1.0 - pihat)) * (y - mua) + mu1hat - mu0hat;
}

double ipw_pseudo(int a, double y, double pihat) {
  return (a - pihat) * y / (pihat * (1.0 - pihat));
}

double error_function_rhat(double pi, double pihat, double mu0, double mu0hat,
                           double mu1, double mu1hat) {
  return (pi / pihat - 1.0) * (mu1 - mu1hat) -
         ((1.0 - pi) / (1.0 - pihat) - 1.0) * (mu0 - mu0hat);
}

double conditional_bias_oracle(double pi, double pihat, double mu0,
                               double mu0hat, double mu1, double mu1hat) {
  const double mean_treated = dr_pseudo(1, mu1, pihat, mu0hat, mu1hat);
  const double mean_control = dr_pseudo(0, mu0, pihat, mu0hat, mu1hat);
  return pi * mean_treated + (1.0 - pi) * mean_control - (mu1 - mu0);
}

}  // namespace cate::pseudo
