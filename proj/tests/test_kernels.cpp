#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "optde/kernels.hpp"

using namespace optde;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("active backend is a known table") {
  const auto& t = kernels::active();
  CHECK((t.name == "scalar" || t.name == "avx2"));
}

#ifdef OPTDE_WITH_AVX2
TEST_CASE("avx2 kernels match the scalar reference") {
  if (!__builtin_cpu_supports("avx2")) return;
  const auto& s = kernels::scalar::table;
  const auto& v = kernels::avx2::table;
  std::mt19937_64 rng(99);

  for (std::size_t n : {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 33, 64, 67, 256, 1001}) {
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);

    const double ds = s.dot(n, x.data(), y.data());
    const double dv = v.dot(n, x.data(), y.data());
    CHECK(dv == doctest::Approx(ds).epsilon(1e-12));

    CHECK(v.sum_sq(n, x.data()) == doctest::Approx(s.sum_sq(n, x.data())).epsilon(1e-12));
    CHECK(v.max_abs(n, x.data()) == s.max_abs(n, x.data()));
    CHECK(v.all_finite(n, x.data()));

    std::vector<double> os(n), ov(n);
    s.sub(n, os.data(), x.data(), y.data());
    v.sub(n, ov.data(), x.data(), y.data());
    CHECK(os == ov);

    s.scale(n, os.data(), x.data(), 1.7);
    v.scale(n, ov.data(), x.data(), 1.7);
    CHECK(os == ov);

    s.add_scaled(n, os.data(), x.data(), -0.3, y.data());
    v.add_scaled(n, ov.data(), x.data(), -0.3, y.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(ov[i] == doctest::Approx(os[i]).epsilon(1e-14));

    auto ys = y, yv = y;
    s.axpy(n, 0.9, x.data(), ys.data());
    v.axpy(n, 0.9, x.data(), yv.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(yv[i] == doctest::Approx(ys[i]).epsilon(1e-14));

    auto lo = random_vec(n, rng), hi = lo;
    for (auto& h : hi) h += 1.0;
    s.clamp(n, os.data(), x.data(), lo.data(), hi.data());
    v.clamp(n, ov.data(), x.data(), lo.data(), hi.data());
    CHECK(os == ov);
  }
}

TEST_CASE("avx2 shares the scalar power kernels") {
  CHECK(kernels::avx2::table.sum_abs_pow == kernels::scalar::table.sum_abs_pow);
  CHECK(kernels::avx2::table.signed_pow_scale == kernels::scalar::table.signed_pow_scale);
}
#endif

TEST_CASE("all_finite flags nan and inf at any position") {
  const auto& t = kernels::active();
  std::vector<double> x(13, 1.0);
  CHECK(t.all_finite(x.size(), x.data()));
  for (std::size_t pos : {std::size_t(0), std::size_t(5), std::size_t(12)}) {
    auto bad = x;
    bad[pos] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite(bad.size(), bad.data()));
    bad[pos] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(t.all_finite(bad.size(), bad.data()));
  }
}

TEST_CASE("dot of x with itself equals sum_sq") {
  std::mt19937_64 rng(5);
  auto x = random_vec(37, rng);
  CHECK(kernels::dot(x, x) == doctest::Approx(kernels::sum_sq(x)).epsilon(1e-13));
}

TEST_CASE("signed_pow_scale handles zeros without nan") {
  std::vector<double> x{0.0, -2.0, 1.0, 0.0};
  std::vector<double> out(4);
  kernels::signed_pow_scale(out, x, 2.0, 0.5);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(-2.0 * std::sqrt(2.0)));
  CHECK(out[2] == doctest::Approx(2.0));
  CHECK(out[3] == 0.0);
}
