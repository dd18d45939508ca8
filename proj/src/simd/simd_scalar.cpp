#include <cmath>
#include <cstddef>

#include "cate/simd.hpp"

namespace cate::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double dot3_scalar(const double* a, const double* b, const double* c,
                   std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i] * c[i];
  return acc;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sumsq_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

double weighted_sumsq_scalar(const double* w, const double* r, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * r[i] * r[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void epan_weights_scalar(const double* x, std::size_t n, double center,
                         double inv_h, double* w) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    const double t = 1.0 - u * u;
    w[i] = t > 0.0 ? t : 0.0;
  }
}

void epan_weights_mul_scalar(const double* x, std::size_t n, double center,
                             double inv_h, double* w) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    const double t = 1.0 - u * u;
    w[i] *= t > 0.0 ? t : 0.0;
  }
}

void boxcar_weights_scalar(const double* x, std::size_t n, double center,
                           double inv_h, double* w) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    w[i] = std::fabs(u) <= 1.0 ? 1.0 : 0.0;
  }
}

void boxcar_weights_mul_scalar(const double* x, std::size_t n, double center,
                               double inv_h, double* w) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    if (!(std::fabs(u) <= 1.0)) w[i] = 0.0;
  }
}

void clip_scalar(const double* x, std::size_t n, double lo, double hi,
                 double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    v = v > lo ? v : lo;  // NaN falls to lo, matching the vector min/max path
    v = v < hi ? v : hi;
    out[i] = v;
  }
}

void lp1d_moments_scalar(const double* x, const double* y, std::size_t n,
                         double center, double inv_h, bool boxcar,
                         Moments1d* m) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double t0 = 0, t1 = 0, t2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    double w;
    if (boxcar) {
      w = std::fabs(u) <= 1.0 ? 1.0 : 0.0;
    } else {
      const double t = 1.0 - u * u;
      w = t > 0.0 ? t : 0.0;
    }
    if (w == 0.0) continue;
    const double wu = w * u;
    const double wu2 = wu * u;
    s0 += w;
    s1 += wu;
    s2 += wu2;
    s3 += wu2 * u;
    s4 += wu2 * u * u;
    const double wy = w * y[i];
    t0 += wy;
    t1 += wy * u;
    t2 += wy * u * u;
  }
  m->s[0] = s0; m->s[1] = s1; m->s[2] = s2; m->s[3] = s3; m->s[4] = s4;
  m->t[0] = t0; m->t[1] = t1; m->t[2] = t2;
}

void lpr1d_moments_scalar(const double* x, const double* phia,
                          const double* phi, std::size_t n, double center,
                          double inv_h, bool boxcar, Moments1d* m) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double t0 = 0, t1 = 0, t2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    double w;
    if (boxcar) {
      w = std::fabs(u) <= 1.0 ? 1.0 : 0.0;
    } else {
      const double t = 1.0 - u * u;
      w = t > 0.0 ? t : 0.0;
    }
    if (w == 0.0) continue;
    const double wa = w * phia[i];
    const double wau = wa * u;
    const double wau2 = wau * u;
    s0 += wa;
    s1 += wau;
    s2 += wau2;
    s3 += wau2 * u;
    s4 += wau2 * u * u;
    const double wp = w * phi[i];
    t0 += wp;
    t1 += wp * u;
    t2 += wp * u * u;
  }
  m->s[0] = s0; m->s[1] = s1; m->s[2] = s2; m->s[3] = s3; m->s[4] = s4;
  m->t[0] = t0; m->t[1] = t1; m->t[2] = t2;
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k = {
      dot_scalar,
      dot3_scalar,
      sum_scalar,
      sumsq_scalar,
      weighted_sumsq_scalar,
      axpy_scalar,
      epan_weights_scalar,
      epan_weights_mul_scalar,
      boxcar_weights_scalar,
      boxcar_weights_mul_scalar,
      clip_scalar,
      lp1d_moments_scalar,
      lpr1d_moments_scalar,
  };
  return k;
}

}  // namespace cate::simd
