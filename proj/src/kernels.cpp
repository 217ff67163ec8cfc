#include "optde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace optde::kernels {

namespace scalar {

static double dot_(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

static double sum_sq_(std::size_t n, const double* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

static double max_abs_(std::size_t n, const double* x) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

static bool all_finite_(std::size_t n, const double* x) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

static void axpy_(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

static void add_scaled_(std::size_t n, double* out, const double* x, double a,
                        const double* y) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * y[i];
}

static void sub_(std::size_t n, double* out, const double* x, const double* y) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

static void scale_(std::size_t n, double* out, const double* x, double a) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

static void clamp_(std::size_t n, double* out, const double* x,
                   const double* lo, const double* hi) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

static double sum_abs_pow_(std::size_t n, const double* x, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::pow(std::fabs(x[i]), p);
  return s;
}

static void signed_pow_scale_(std::size_t n, double* out, const double* x,
                              double s, double e) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = std::fabs(x[i]);
    out[i] = ax == 0.0 ? 0.0 : std::copysign(s * std::pow(ax, e), x[i]);
  }
}

const Table table = {dot_,   sum_sq_, max_abs_,     all_finite_,
                     axpy_,  add_scaled_, sub_,     scale_,
                     clamp_, sum_abs_pow_, signed_pow_scale_, "scalar"};

}  // namespace scalar

static const Table& pick_backend() {
  const char* env = std::getenv("OPTDE_KERNELS");
  if (env && std::strcmp(env, "scalar") == 0) return scalar::table;
#ifdef OPTDE_WITH_AVX2
  if (env && std::strcmp(env, "avx2") == 0) return avx2::table;
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return avx2::table;
#endif
  return scalar::table;
}

const Table& active() {
  static const Table& t = pick_backend();
  return t;
}

}  // namespace optde::kernels
