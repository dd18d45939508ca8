#pragma once

#include <cstddef>
#include <string>

namespace cate::simd {

// Moment accumulators for 1-d local polynomial fits of degree <= 2.
// S[k] = sum_i w_i * u_i^k (k = 0..4), T[k] = sum_i w_i * y_i * u_i^k (k = 0..2)
// with u_i = (x_i - center) * inv_h and w_i the kernel value at u_i.
struct Moments1d {
  double s[5];
  double t[3];
};

// Function table for the data-parallel inner loops. Every entry has a scalar
// reference implementation; an AVX2+FMA variant is selected at runtime when
// the CPU supports it (override with CATE_SIMD=scalar|avx2|auto).
//
// Inputs must be finite: the clip kernels map NaN to the lower bound.
struct Kernels {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i a[i] * b[i] * c[i]
  double (*dot3)(const double* a, const double* b, const double* c,
                 std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sumsq)(const double* a, std::size_t n);
  double (*weighted_sumsq)(const double* w, const double* r, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // w[i] = max(0, 1 - u^2), u = (x[i] - center) * inv_h
  void (*epan_weights)(const double* x, std::size_t n, double center,
                       double inv_h, double* w);
  // w[i] *= max(0, 1 - u^2)   (product kernel, dimensions beyond the first)
  void (*epan_weights_mul)(const double* x, std::size_t n, double center,
                           double inv_h, double* w);
  // w[i] = 1(|u| <= 1)
  void (*boxcar_weights)(const double* x, std::size_t n, double center,
                         double inv_h, double* w);
  void (*boxcar_weights_mul)(const double* x, std::size_t n, double center,
                             double inv_h, double* w);
  // out[i] = min(hi, max(lo, x[i]))
  void (*clip)(const double* x, std::size_t n, double lo, double hi,
               double* out);
  // Fused kernel-weight + moment pass, Epanechnikov or boxcar weights.
  void (*lp1d_moments)(const double* x, const double* y, std::size_t n,
                       double center, double inv_h, bool boxcar, Moments1d* m);
  // Ratio-weighted variant: S uses weight w*phia, T uses w*phi.
  void (*lpr1d_moments)(const double* x, const double* phia, const double* phi,
                        std::size_t n, double center, double inv_h, bool boxcar,
                        Moments1d* m);
};

const Kernels& scalar_kernels();
const Kernels& active();
// Name of the dispatch target in use ("scalar" or "avx2").
std::string active_name();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double dot3(const double* a, const double* b, const double* c,
                   std::size_t n) {
  return active().dot3(a, b, c, n);
}
inline double sum(const double* a, std::size_t n) { return active().sum(a, n); }
inline double sumsq(const double* a, std::size_t n) {
  return active().sumsq(a, n);
}
inline double weighted_sumsq(const double* w, const double* r, std::size_t n) {
  return active().weighted_sumsq(w, r, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void epan_weights(const double* x, std::size_t n, double center,
                         double inv_h, double* w) {
  active().epan_weights(x, n, center, inv_h, w);
}
inline void epan_weights_mul(const double* x, std::size_t n, double center,
                             double inv_h, double* w) {
  active().epan_weights_mul(x, n, center, inv_h, w);
}
inline void boxcar_weights(const double* x, std::size_t n, double center,
                           double inv_h, double* w) {
  active().boxcar_weights(x, n, center, inv_h, w);
}
inline void boxcar_weights_mul(const double* x, std::size_t n, double center,
                               double inv_h, double* w) {
  active().boxcar_weights_mul(x, n, center, inv_h, w);
}
inline void clip(const double* x, std::size_t n, double lo, double hi,
                 double* out) {
  active().clip(x, n, lo, hi, out);
}
inline void lp1d_moments(const double* x, const double* y, std::size_t n,
                         double center, double inv_h, bool boxcar,
                         Moments1d* m) {
  active().lp1d_moments(x, y, n, center, inv_h, boxcar, m);
}
inline void lpr1d_moments(const double* x, const double* phia,
                          const double* phi, std::size_t n, double center,
                          double inv_h, bool boxcar, Moments1d* m) {
  active().lpr1d_moments(x, phia, phi, n, center, inv_h, boxcar, m);
}

}  // namespace cate::simd
