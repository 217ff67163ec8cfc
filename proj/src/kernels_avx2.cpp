#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "optde/kernels.hpp"

// AVX2 variants of the arithmetic kernels. Reductions use four independent
// accumulators to break the dependency chain; tails fall back to scalar
// loops. Results may differ from the scalar reference by normal FMA/
// reassociation rounding, which the equivalence tests budget for.

namespace optde::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq_(std::size_t n, const double* x) { return dot_(n, x, x); }

double max_abs_(std::size_t n, const double* x) {
  const __m256d mask = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    m = _mm256_max_pd(m, _mm256_andnot_pd(mask, _mm256_loadu_pd(x + i)));
  alignas(32) double buf[4];
  _mm256_store_pd(buf, m);
  double r = std::max(std::max(buf[0], buf[1]), std::max(buf[2], buf[3]));
  for (; i < n; ++i) r = std::max(r, std::fabs(x[i]));
  return r;
}

bool all_finite_(std::size_t n, const double* x) {
  // |x| < inf catches both NaN (compare false) and +-inf.
  const __m256d mask = _mm256_set1_pd(-0.0);
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_andnot_pd(mask, _mm256_loadu_pd(x + i));
    __m256d ok = _mm256_cmp_pd(a, inf, _CMP_LT_OQ);
    if (_mm256_movemask_pd(ok) != 0xF) return false;
  }
  for (; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

void axpy_(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void add_scaled_(std::size_t n, double* out, const double* x, double a,
                 const double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(y + i),
                                              _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = x[i] + a * y[i];
}

void sub_(std::size_t n, double* out, const double* x, const double* y) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void scale_(std::size_t n, double* out, const double* x, double a) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = a * x[i];
}

void clamp_(std::size_t n, double* out, const double* x, const double* lo,
            const double* hi) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    v = _mm256_max_pd(v, _mm256_loadu_pd(lo + i));
    v = _mm256_min_pd(v, _mm256_loadu_pd(hi + i));
    _mm256_storeu_pd(out + i, v);
  }
  for (; i < n; ++i) out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

}  // namespace

const Table table = {dot_,
                     sum_sq_,
                     max_abs_,
                     all_finite_,
                     axpy_,
                     add_scaled_,
                     sub_,
                     scale_,
                     clamp_,
                     scalar::table.sum_abs_pow,
                     scalar::table.signed_pow_scale,
                     "avx2"};

}  // namespace optde::kernels::avx2
