#pragma once

// Elementwise and reduction kernels used by the geometry and solver inner
// loops. A scalar reference implementation is always available; on x86-64
// an AVX2 variant of the plain arithmetic kernels is selected at runtime
// when the CPU supports it. The power-law kernels (lp norms and their
// gradient maps) stay scalar in both backends: they are dominated by
// std::pow and gain nothing from vectorization here.
//
// Set OPTDE_KERNELS=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace optde::kernels {

struct Table {
  double (*dot)(std::size_t, const double*, const double*);
  double (*sum_sq)(std::size_t, const double*);
  double (*max_abs)(std::size_t, const double*);
  bool (*all_finite)(std::size_t, const double*);
  // y[i] += a * x[i]
  void (*axpy)(std::size_t, double, const double*, double*);
  // out[i] = x[i] + a * y[i]
  void (*add_scaled)(std::size_t, double*, const double*, double, const double*);
  // out[i] = x[i] - y[i]
  void (*sub)(std::size_t, double*, const double*, const double*);
  // out[i] = a * x[i]
  void (*scale)(std::size_t, double*, const double*, double);
  // out[i] = min(max(x[i], lo[i]), hi[i])
  void (*clamp)(std::size_t, double*, const double*, const double*, const double*);
  // sum_i |x[i]|^p   (scalar in every backend)
  double (*sum_abs_pow)(std::size_t, const double*, double);
  // out[i] = s * sign(x[i]) * |x[i]|^e
  void (*signed_pow_scale)(std::size_t, double*, const double*, double, double);
  std::string_view name;
};

namespace scalar {
extern const Table table;
}
#ifdef OPTDE_WITH_AVX2
namespace avx2 {
extern const Table table;
}
#endif

// Backend chosen once on first use.
const Table& active();

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.size(), x.data(), y.data());
}
inline double sum_sq(std::span<const double> x) {
  return active().sum_sq(x.size(), x.data());
}
inline double max_abs(std::span<const double> x) {
  return active().max_abs(x.size(), x.data());
}
inline bool all_finite(std::span<const double> x) {
  return active().all_finite(x.size(), x.data());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(x.size(), a, x.data(), y.data());
}
inline void add_scaled(std::span<double> out, std::span<const double> x,
                       double a, std::span<const double> y) {
  active().add_scaled(out.size(), out.data(), x.data(), a, y.data());
}
inline void sub(std::span<double> out, std::span<const double> x,
                std::span<const double> y) {
  active().sub(out.size(), out.data(), x.data(), y.data());
}
inline void scale(std::span<double> out, std::span<const double> x, double a) {
  active().scale(out.size(), out.data(), x.data(), a);
}
inline void clamp(std::span<double> out, std::span<const double> x,
                  std::span<const double> lo, std::span<const double> hi) {
  active().clamp(out.size(), out.data(), x.data(), lo.data(), hi.data());
}
inline double sum_abs_pow(std::span<const double> x, double p) {
  return active().sum_abs_pow(x.size(), x.data(), p);
}
inline void signed_pow_scale(std::span<double> out, std::span<const double> x,
                             double s, double e) {
  active().signed_pow_scale(out.size(), out.data(), x.data(), s, e);
}

}  // namespace optde::kernels
