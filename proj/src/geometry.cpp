#include "optde/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "optde/kernels.hpp"

namespace optde {

namespace {

void require_finite(std::span<const double> x, const char* who) {
  if (!kernels::all_finite(x))
    throw invalid_input(std::string(who) + ": non-finite input");
}

void require_dim(std::size_t got, std::size_t want, const char* who) {
  if (got != want)
    throw invalid_input(std::string(who) + ": dimension mismatch");
}

}  // namespace

NormGeometry NormGeometry::lp(double p) {
  if (!(p > 1.0 && p <= 2.0))
    throw invalid_input("NormGeometry::lp: requires 1 < p <= 2");
  NormGeometry g;
  g.kind = NormKind::lp;
  g.p = p;
  g.gamma = p - 1.0;
  g.delta = 1.0;
  return g;
}

FeasibleSet FeasibleSet::full_space(std::size_t d) {
  if (d < 1) throw invalid_input("FeasibleSet::full_space: d >= 1 required");
  FeasibleSet s;
  s.kind = Kind::full_space;
  s.dim = d;
  return s;
}

FeasibleSet FeasibleSet::box(Vec lower, Vec upper) {
  if (lower.empty() || lower.size() != upper.size())
    throw invalid_input("FeasibleSet::box: bound sizes mismatch");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i]))
      throw invalid_input("FeasibleSet::box: lower > upper");
  FeasibleSet s;
  s.kind = Kind::box;
  s.dim = lower.size();
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  return s;
}

FeasibleSet FeasibleSet::ball(Vec center, double radius) {
  if (center.empty()) throw invalid_input("FeasibleSet::ball: empty center");
  if (!(radius > 0.0)) throw invalid_input("FeasibleSet::ball: radius <= 0");
  FeasibleSet s;
  s.kind = Kind::ball;
  s.dim = center.size();
  s.center = std::move(center);
  s.radius = radius;
  return s;
}

bool FeasibleSet::contains(std::span<const double> x, double tol) const {
  if (x.size() != dim) return false;
  switch (kind) {
    case Kind::full_space:
      return true;
    case Kind::box:
      for (std::size_t i = 0; i < dim; ++i)
        if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
      return true;
    case Kind::ball: {
      Vec d(dim);
      kernels::sub(as_span(d), x, as_span(center));
      return std::sqrt(kernels::sum_sq(as_span(d))) <= radius + tol;
    }
  }
  return false;
}

double norm(const NormGeometry& g, std::span<const double> x) {
  if (x.empty()) throw invalid_input("norm: empty vector");
  require_finite(x, "norm");
  if (g.kind == NormKind::euclidean) return std::sqrt(kernels::sum_sq(x));
  return std::pow(kernels::sum_abs_pow(x, g.p), 1.0 / g.p);
}

double dual_norm(const NormGeometry& g, std::span<const double> y) {
  if (y.empty()) throw invalid_input("dual_norm: empty vector");
  require_finite(y, "dual_norm");
  if (g.kind == NormKind::euclidean) return std::sqrt(kernels::sum_sq(y));
  return std::pow(kernels::sum_abs_pow(y, g.q()), 1.0 / g.q());
}

namespace {

// Shared by the forward (exponent p) and inverse (exponent q) maps: the
// gradient of 0.5*||.||_e^2 is  ||x||_e^(2-e) * sign(x_i) |x_i|^(e-1).
void lp_grad_map(std::span<const double> x, double e, std::span<double> out) {
  const double nx = std::pow(kernels::sum_abs_pow(x, e), 1.0 / e);
  if (nx == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  kernels::signed_pow_scale(out, x, std::pow(nx, 2.0 - e), e - 1.0);
}

}  // namespace

void grad_half_norm_sq(const NormGeometry& g, std::span<const double> x,
                       std::span<double> out) {
  require_dim(out.size(), x.size(), "grad_half_norm_sq");
  require_finite(x, "grad_half_norm_sq");
  if (g.kind == NormKind::euclidean) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  lp_grad_map(x, g.p, out);
}

Vec grad_half_norm_sq(const NormGeometry& g, std::span<const double> x) {
  Vec out(x.size());
  grad_half_norm_sq(g, x, as_span(out));
  return out;
}

void inv_grad_half_norm_sq(const NormGeometry& g, std::span<const double> y,
                           std::span<double> out) {
  require_dim(out.size(), y.size(), "inv_grad_half_norm_sq");
  require_finite(y, "inv_grad_half_norm_sq");
  if (g.kind == NormKind::euclidean) {
    std::copy(y.begin(), y.end(), out.begin());
    return;
  }
  lp_grad_map(y, g.q(), out);
}

Vec inv_grad_half_norm_sq(const NormGeometry& g, std::span<const double> y) {
  Vec out(y.size());
  inv_grad_half_norm_sq(g, y, as_span(out));
  return out;
}

double bregman(const NormGeometry& g, std::span<const double> v,
               std::span<const double> w) {
  require_dim(w.size(), v.size(), "bregman");
  const double nw = norm(g, w);
  const double nv = norm(g, v);
  Vec gv = grad_half_norm_sq(g, v);
  Vec diff(w.size());
  kernels::sub(as_span(diff), w, v);
  return 0.5 * nw * nw - 0.5 * nv * nv - kernels::dot(as_span(gv), as_span(diff));
}

void project(const FeasibleSet& set, std::span<const double> x, std::span<double> out) {
  require_dim(x.size(), set.dim, "project");
  require_dim(out.size(), set.dim, "project");
  switch (set.kind) {
    case FeasibleSet::Kind::full_space:
      std::copy(x.begin(), x.end(), out.begin());
      return;
    case FeasibleSet::Kind::box:
      kernels::clamp(out, x, as_span(set.lower), as_span(set.upper));
      return;
    case FeasibleSet::Kind::ball: {
      Vec d(set.dim);
      kernels::sub(as_span(d), x, as_span(set.center));
      const double r = std::sqrt(kernels::sum_sq(as_span(d)));
      if (r <= set.radius) {
        std::copy(x.begin(), x.end(), out.begin());
      } else {
        kernels::add_scaled(out, as_span(set.center), set.radius / r, as_span(d));
      }
      return;
    }
  }
}

Vec project(const FeasibleSet& set, std::span<const double> x) {
  Vec out(x.size());
  project(set, x, as_span(out));
  return out;
}

namespace {

// The lp prox over a box or ball is solved through its KKT system. With
// u = z - v, stationarity reads
//
//   w_i + (c/gamma) sign(u_i)|u_i|^(p-1) + (normal cone terms) = 0,
//   c = ||u||_p^(2-p),
//
// so the coordinates couple only through the scalar c (plus one multiplier
// for the ball). ||u(c)||_p^(2-p) is nonincreasing in c, which makes the
// fixed point a safe bisection target.

// Root of (c/gamma) sign(u)|u|^(p-1) + mu*(u - shift) = rhs in u; the left
// side is strictly increasing.
double ball_coordinate_root(double c_over_gamma, double p, double mu,
                            double shift, double rhs, double bracket) {
  double lo = -bracket, hi = bracket;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double val = c_over_gamma * std::copysign(std::pow(std::fabs(mid), p - 1.0), mid) +
                       mu * (mid - shift);
    (val < rhs ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// The computed offset z_i - v_i can fall within a few ulps of v_i, where
// rounding of the addition dominates the KKT residual (the |u|^(p-1) term
// amplifies ulp-scale errors for p < 2). Re-pick each coordinate among its
// representable neighbors to minimize the residual actually observable
// through the z - v subtraction.
void refine_coordinates(std::span<const double> v, double c_over_gamma, double p,
                        const std::function<double(std::size_t, double)>& extra,
                        std::span<const double> lo, std::span<const double> hi,
                        Vec& z) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!lo.empty() && (z[i] <= lo[i] || z[i] >= hi[i])) continue;  // clamped: exact
    double best_z = z[i];
    double best_r = std::numeric_limits<double>::infinity();
    double cand_up = z[i], cand_dn = z[i];
    for (int step = 0; step <= 3; ++step) {
      for (double cand : {cand_up, cand_dn}) {
        if (!lo.empty() && (cand < lo[i] || cand > hi[i])) continue;
        const double u = cand - v[i];
        const double psi = u == 0.0 ? 0.0 : std::copysign(std::pow(std::fabs(u), p - 1.0), u);
        const double r = std::fabs(c_over_gamma * psi + extra(i, cand));
        if (r < best_r) {
          best_r = r;
          best_z = cand;
        }
      }
      cand_up = std::nextafter(cand_up, std::numeric_limits<double>::infinity());
      cand_dn = std::nextafter(cand_dn, -std::numeric_limits<double>::infinity());
    }
    z[i] = best_z;
  }
}

Vec prox_lp_box(const NormGeometry& g, const FeasibleSet& set,
                std::span<const double> v, std::span<const double> w) {
  const std::size_t d = v.size();
  const double inv_pm1 = 1.0 / (g.p - 1.0);

  // z_i as a function of the coupling scalar c.
  Vec z(d), u(d);
  auto eval = [&](double c) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      if (w[i] != 0.0)
        s = -std::copysign(std::pow(g.gamma * std::fabs(w[i]) / c, inv_pm1), w[i]);
      z[i] = std::min(std::max(v[i] + s, set.lower[i]), set.upper[i]);
      u[i] = z[i] - v[i];
    }
    return std::pow(kernels::sum_abs_pow(as_span(u), g.p), (2.0 - g.p) / g.p);
  };

  if (kernels::max_abs(w) == 0.0) {
    kernels::clamp(as_span(z), v, as_span(set.lower), as_span(set.upper));
    return z;
  }
  double lo = 1e-12;
  if (eval(lo) <= lo) return z;  // z = v (clamped), u vanishes
  double hi = 1.0;
  while (eval(hi) > hi) {
    hi *= 2.0;
    if (hi > 1e18) throw numeric_failure("prox_map: box coupling bracket failed", hi);
  }
  for (int it = 0; it < 140; ++it) {
    const double mid = 0.5 * (lo + hi);
    (eval(mid) > mid ? lo : hi) = mid;
  }
  const double c = hi;
  eval(c);
  refine_coordinates(
      v, c / g.gamma, g.p, [&](std::size_t i, double) { return w[i]; },
      as_span(set.lower), as_span(set.upper), z);
  return z;
}

Vec prox_lp_ball(const NormGeometry& g, const FeasibleSet& set,
                 std::span<const double> v, std::span<const double> w,
                 const ProxOptions& opts) {
  const std::size_t d = v.size();

  // Inactive-constraint fast path: the full-space solution.
  Vec scaled(d);
  kernels::scale(as_span(scaled), w, -g.gamma);
  Vec shift = inv_grad_half_norm_sq(g, as_span(scaled));
  Vec z(d), diff(d);
  for (std::size_t i = 0; i < d; ++i) z[i] = v[i] + shift[i];
  kernels::sub(as_span(diff), as_span(z), as_span(set.center));
  if (std::sqrt(kernels::sum_sq(as_span(diff))) <= set.radius) return z;

  Vec u(d);
  auto eval_c = [&](double c, double mu) {
    // Solve each coordinate of w + (c/gamma) psi(u) + mu (u + v - b) = 0.
    // The bracket is capped: for small-c probes the unconstrained psi root
    // blows up, but beyond the cap only the sign of the residual matters
    // for the outer bisections, while roots near the true (c, mu) stay
    // interior (|u*| <= |shift| + radius there).
    for (std::size_t i = 0; i < d; ++i) {
      const double shift_i = set.center[i] - v[i];
      const double base = std::fabs(shift_i) + set.radius + 1.0;
      const double psi_root =
          std::pow(g.gamma * std::fabs(w[i]) / c, 1.0 / (g.p - 1.0));
      const double bracket = base + std::min(psi_root, 1e6);
      u[i] = ball_coordinate_root(c / g.gamma, g.p, mu, shift_i, -w[i], bracket);
    }
    return std::pow(kernels::sum_abs_pow(as_span(u), g.p), (2.0 - g.p) / g.p);
  };
  auto solve_c = [&](double mu) {
    double lo = 1e-12;
    if (eval_c(lo, mu) <= lo) return lo;
    double hi = 1.0;
    while (eval_c(hi, mu) > hi) {
      hi *= 2.0;
      if (hi > 1e18)
        throw numeric_failure("prox_map: ball coupling bracket failed", hi);
    }
    for (int it = 0; it < 90; ++it) {
      const double mid = 0.5 * (lo + hi);
      (eval_c(mid, mu) > mid ? lo : hi) = mid;
    }
    return hi;
  };
  auto ball_violation = [&](double mu) {
    eval_c(solve_c(mu), mu);
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double zi = v[i] + u[i];
      s += (zi - set.center[i]) * (zi - set.center[i]);
    }
    return std::sqrt(s) - set.radius;
  };

  double mu_lo = 0.0, mu_hi = 1.0;
  while (ball_violation(mu_hi) > 0.0) {
    mu_hi *= 2.0;
    if (mu_hi > 1e18)
      throw numeric_failure("prox_map: ball multiplier bracket failed", mu_hi);
  }
  double resid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 90 && resid > opts.tol * 1e-2; ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    const double viol = ball_violation(mid);
    resid = std::fabs(viol);
    (viol > 0.0 ? mu_lo : mu_hi) = mid;
  }
  const double mu = mu_hi;
  const double c = solve_c(mu);
  eval_c(c, mu);
  for (std::size_t i = 0; i < d; ++i) z[i] = v[i] + u[i];
  refine_coordinates(
      v, c / g.gamma, g.p,
      [&](std::size_t i, double zi) { return w[i] + mu * (zi - set.center[i]); },
      {}, {}, z);
  return z;
}

Vec prox_inner(const NormGeometry& g, const FeasibleSet& set,
               std::span<const double> v, std::span<const double> w,
               const ProxOptions& opts) {
  if (set.kind == FeasibleSet::Kind::box) return prox_lp_box(g, set, v, w);
  return prox_lp_ball(g, set, v, w, opts);
}

}  // namespace

Vec prox_map(const NormGeometry& g, const FeasibleSet& set,
             std::span<const double> v, std::span<const double> w,
             const ProxOptions& opts) {
  require_dim(v.size(), set.dim, "prox_map");
  require_dim(w.size(), set.dim, "prox_map");
  require_finite(v, "prox_map");
  require_finite(w, "prox_map");

  if (g.kind == NormKind::euclidean) {
    Vec y(v.size());
    kernels::add_scaled(as_span(y), v, -g.gamma, w);
    return project(set, as_span(y));
  }
  if (set.kind == FeasibleSet::Kind::full_space) {
    Vec scaled(w.size());
    kernels::scale(as_span(scaled), w, -g.gamma);
    Vec shift = inv_grad_half_norm_sq(g, as_span(scaled));
    Vec out(v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] + shift[i];
    return out;
  }
  return prox_inner(g, set, v, w, opts);
}

namespace {

// Root of  z + lam * e * z^(e-1) = target  on [0, target], e > 1.
// Safeguarded Newton from z = target; the left side is increasing.
double lp_ball_coordinate(double target, double lam, double e) {
  if (target <= 0.0) return 0.0;
  double lo = 0.0, hi = target, z = target;
  for (int it = 0; it < 60; ++it) {
    const double pw = std::pow(z, e - 1.0);
    const double val = z + lam * e * pw - target;
    if (std::fabs(val) <= 1e-15 * (1.0 + target)) return z;
    (val < 0.0 ? lo : hi) = z;
    const double deriv = 1.0 + lam * e * (e - 1.0) * (z > 0 ? pw / z : 0.0);
    double next = z - val / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    z = next;
  }
  return z;
}

}  // namespace

Vec project_norm_ball(const NormGeometry& g, std::span<const double> center,
                      double radius, std::span<const double> x) {
  require_dim(x.size(), center.size(), "project_norm_ball");
  const std::size_t d = x.size();
  Vec rel(d);
  kernels::sub(as_span(rel), x, center);
  if (norm(g, as_span(rel)) <= radius) return Vec(x.begin(), x.end());

  if (g.kind == NormKind::euclidean) {
    const double r = std::sqrt(kernels::sum_sq(as_span(rel)));
    Vec out(d);
    kernels::add_scaled(as_span(out), center, radius / r, as_span(rel));
    return out;
  }

  // KKT system for min 0.5||z - rel||_2^2 s.t. sum |z_i|^p <= radius^p:
  // z_i + lam * p * sign(z_i)|z_i|^(p-1) = rel_i, with lam found by
  // bisection on the constraint.
  const double p = g.p;
  const double target = std::pow(radius, p);
  auto constraint = [&](double lam, Vec& z) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double zi = lp_ball_coordinate(std::fabs(rel[i]), lam, p);
      z[i] = std::copysign(zi, rel[i]);
      s += std::pow(zi, p);
    }
    return s;
  };
  Vec z(d);
  double lo = 0.0, hi = 1.0;
  while (constraint(hi, z) > target) {
    hi *= 2.0;
    if (hi > 1e18)
      throw numeric_failure("project_norm_ball: multiplier bracket failed", hi);
  }
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double c = constraint(mid, z);
    if (std::fabs(c - target) <= 1e-14 * target) {
      hi = mid;
      break;
    }
    (c > target ? lo : hi) = mid;
  }
  constraint(hi, z);
  Vec out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = center[i] + z[i];
  return out;
}

}  // namespace optde
