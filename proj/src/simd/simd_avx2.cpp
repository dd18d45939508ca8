// AVX2+FMA variants of the kernel table. This translation unit is compiled
// with -mavx2 -mfma and must only be reached through the runtime dispatcher.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "cate/simd.hpp"

namespace cate::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double r = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double dot3_avx2(const double* a, const double* b, const double* c,
                 std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(ab, _mm256_loadu_pd(c + i), acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i] * c[i];
  return r;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

double sumsq_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * a[i];
  return r;
}

double weighted_sumsq_avx2(const double* w, const double* r, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d rv = _mm256_loadu_pd(r + i);
    __m256d wv = _mm256_loadu_pd(w + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(wv, rv), rv, acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += w[i] * r[i] * r[i];
  return out;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

inline __m256d epan_vec(__m256d xv, __m256d cv, __m256d ihv) {
  __m256d u = _mm256_mul_pd(_mm256_sub_pd(xv, cv), ihv);
  __m256d t = _mm256_fnmadd_pd(u, u, _mm256_set1_pd(1.0));
  return _mm256_max_pd(t, _mm256_setzero_pd());
}

inline __m256d boxcar_vec(__m256d xv, __m256d cv, __m256d ihv) {
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d u = _mm256_and_pd(_mm256_mul_pd(_mm256_sub_pd(xv, cv), ihv), absmask);
  __m256d in = _mm256_cmp_pd(u, _mm256_set1_pd(1.0), _CMP_LE_OQ);
  return _mm256_and_pd(in, _mm256_set1_pd(1.0));
}

void epan_weights_avx2(const double* x, std::size_t n, double center,
                       double inv_h, double* w) {
  const __m256d cv = _mm256_set1_pd(center), ihv = _mm256_set1_pd(inv_h);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(w + i, epan_vec(_mm256_loadu_pd(x + i), cv, ihv));
  for (; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    const double t = 1.0 - u * u;
    w[i] = t > 0.0 ? t : 0.0;
  }
}

void epan_weights_mul_avx2(const double* x, std::size_t n, double center,
                           double inv_h, double* w) {
  const __m256d cv = _mm256_set1_pd(center), ihv = _mm256_set1_pd(inv_h);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wv = _mm256_mul_pd(_mm256_loadu_pd(w + i),
                               epan_vec(_mm256_loadu_pd(x + i), cv, ihv));
    _mm256_storeu_pd(w + i, wv);
  }
  for (; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    const double t = 1.0 - u * u;
    w[i] *= t > 0.0 ? t : 0.0;
  }
}

void boxcar_weights_avx2(const double* x, std::size_t n, double center,
                         double inv_h, double* w) {
  const __m256d cv = _mm256_set1_pd(center), ihv = _mm256_set1_pd(inv_h);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(w + i, boxcar_vec(_mm256_loadu_pd(x + i), cv, ihv));
  for (; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    w[i] = std::fabs(u) <= 1.0 ? 1.0 : 0.0;
  }
}

void boxcar_weights_mul_avx2(const double* x, std::size_t n, double center,
                             double inv_h, double* w) {
  const __m256d cv = _mm256_set1_pd(center), ihv = _mm256_set1_pd(inv_h);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wv = _mm256_mul_pd(_mm256_loadu_pd(w + i),
                               boxcar_vec(_mm256_loadu_pd(x + i), cv, ihv));
    _mm256_storeu_pd(w + i, wv);
  }
  for (; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    if (!(std::fabs(u) <= 1.0)) w[i] = 0.0;
  }
}

void clip_avx2(const double* x, std::size_t n, double lo, double hi,
               double* out) {
  const __m256d lov = _mm256_set1_pd(lo), hiv = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_max_pd(_mm256_loadu_pd(x + i), lov);
    _mm256_storeu_pd(out + i, _mm256_min_pd(v, hiv));
  }
  for (; i < n; ++i) {
    double v = x[i];
    v = v > lo ? v : lo;
    v = v < hi ? v : hi;
    out[i] = v;
  }
}

template <bool Boxcar>
void lp1d_moments_impl(const double* x, const double* y, std::size_t n,
                       double center, double inv_h, Moments1d* m) {
  const __m256d cv = _mm256_set1_pd(center), ihv = _mm256_set1_pd(inv_h);
  __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0, s4 = s0;
  __m256d t0 = s0, t1 = s0, t2 = s0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d u = _mm256_mul_pd(_mm256_sub_pd(xv, cv), ihv);
    __m256d w = Boxcar ? boxcar_vec(xv, cv, ihv) : epan_vec(xv, cv, ihv);
    __m256d wu = _mm256_mul_pd(w, u);
    __m256d wu2 = _mm256_mul_pd(wu, u);
    s0 = _mm256_add_pd(s0, w);
    s1 = _mm256_add_pd(s1, wu);
    s2 = _mm256_add_pd(s2, wu2);
    s3 = _mm256_fmadd_pd(wu2, u, s3);
    s4 = _mm256_fmadd_pd(_mm256_mul_pd(wu2, u), u, s4);
    __m256d wy = _mm256_mul_pd(w, _mm256_loadu_pd(y + i));
    t0 = _mm256_add_pd(t0, wy);
    t1 = _mm256_fmadd_pd(wy, u, t1);
    t2 = _mm256_fmadd_pd(_mm256_mul_pd(wy, u), u, t2);
  }
  m->s[0] = hsum(s0); m->s[1] = hsum(s1); m->s[2] = hsum(s2);
  m->s[3] = hsum(s3); m->s[4] = hsum(s4);
  m->t[0] = hsum(t0); m->t[1] = hsum(t1); m->t[2] = hsum(t2);
  for (; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    double w;
    if (Boxcar) {
      w = std::fabs(u) <= 1.0 ? 1.0 : 0.0;
    } else {
      const double t = 1.0 - u * u;
      w = t > 0.0 ? t : 0.0;
    }
    if (w == 0.0) continue;
    const double wu = w * u, wu2 = wu * u;
    m->s[0] += w; m->s[1] += wu; m->s[2] += wu2;
    m->s[3] += wu2 * u; m->s[4] += wu2 * u * u;
    const double wy = w * y[i];
    m->t[0] += wy; m->t[1] += wy * u; m->t[2] += wy * u * u;
  }
}

void lp1d_moments_avx2(const double* x, const double* y, std::size_t n,
                       double center, double inv_h, bool boxcar, Moments1d* m) {
  if (boxcar)
    lp1d_moments_impl<true>(x, y, n, center, inv_h, m);
  else
    lp1d_moments_impl<false>(x, y, n, center, inv_h, m);
}

template <bool Boxcar>
void lpr1d_moments_impl(const double* x, const double* phia, const double* phi,
                        std::size_t n, double center, double inv_h,
                        Moments1d* m) {
  const __m256d cv = _mm256_set1_pd(center), ihv = _mm256_set1_pd(inv_h);
  __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0, s4 = s0;
  __m256d t0 = s0, t1 = s0, t2 = s0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d u = _mm256_mul_pd(_mm256_sub_pd(xv, cv), ihv);
    __m256d w = Boxcar ? boxcar_vec(xv, cv, ihv) : epan_vec(xv, cv, ihv);
    __m256d wa = _mm256_mul_pd(w, _mm256_loadu_pd(phia + i));
    __m256d wau = _mm256_mul_pd(wa, u);
    __m256d wau2 = _mm256_mul_pd(wau, u);
    s0 = _mm256_add_pd(s0, wa);
    s1 = _mm256_add_pd(s1, wau);
    s2 = _mm256_add_pd(s2, wau2);
    s3 = _mm256_fmadd_pd(wau2, u, s3);
    s4 = _mm256_fmadd_pd(_mm256_mul_pd(wau2, u), u, s4);
    __m256d wp = _mm256_mul_pd(w, _mm256_loadu_pd(phi + i));
    t0 = _mm256_add_pd(t0, wp);
    t1 = _mm256_fmadd_pd(wp, u, t1);
    t2 = _mm256_fmadd_pd(_mm256_mul_pd(wp, u), u, t2);
  }
  m->s[0] = hsum(s0); m->s[1] = hsum(s1); m->s[2] = hsum(s2);
  m->s[3] = hsum(s3); m->s[4] = hsum(s4);
  m->t[0] = hsum(t0); m->t[1] = hsum(t1); m->t[2] = hsum(t2);
  for (; i < n; ++i) {
    const double u = (x[i] - center) * inv_h;
    double w;
    if (Boxcar) {
      w = std::fabs(u) <= 1.0 ? 1.0 : 0.0;
    } else {
      const double t = 1.0 - u * u;
      w = t > 0.0 ? t : 0.0;
    }
    if (w == 0.0) continue;
    const double wa = w * phia[i];
    const double wau = wa * u, wau2 = wau * u;
    m->s[0] += wa; m->s[1] += wau; m->s[2] += wau2;
    m->s[3] += wau2 * u; m->s[4] += wau2 * u * u;
    const double wp = w * phi[i];
    m->t[0] += wp; m->t[1] += wp * u; m->t[2] += wp * u * u;
  }
}

void lpr1d_moments_avx2(const double* x, const double* phia, const double* phi,
                        std::size_t n, double center, double inv_h, bool boxcar,
                        Moments1d* m) {
  if (boxcar)
    lpr1d_moments_impl<true>(x, phia, phi, n, center, inv_h, m);
  else
    lpr1d_moments_impl<false>(x, phia, phi, n, center, inv_h, m);
}

}  // namespace

namespace detail {

const Kernels& avx2_kernels() {
  static const Kernels k = {
      dot_avx2,
      dot3_avx2,
      sum_avx2,
      sumsq_avx2,
      weighted_sumsq_avx2,
      axpy_avx2,
      epan_weights_avx2,
      epan_weights_mul_avx2,
      boxcar_weights_avx2,
      boxcar_weights_mul_avx2,
      clip_avx2,
      lp1d_moments_avx2,
      lpr1d_moments_avx2,
  };
  return k;
}

}  // namespace detail
}  // namespace cate::simd

#endif  // x86_64
