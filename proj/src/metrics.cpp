#include "optde/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "optde/kernels.hpp"

namespace optde {

namespace {

// Dykstra's alternating projections onto an intersection of convex pieces.
// Returns false if the cycle cap is hit before the increments settle.
bool dykstra(const std::vector<std::function<Vec(std::span<const double>)>>& projs,
             Vec& x, long long max_cycles) {
  const std::size_t d = x.size();
  std::vector<Vec> inc(projs.size(), Vec(d, 0.0));
  Vec y(d);
  for (long long cycle = 0; cycle < max_cycles; ++cycle) {
    double moved = 0.0, scale = 0.0;
    for (std::size_t s = 0; s < projs.size(); ++s) {
      for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + inc[s][i];
      Vec px = projs[s](as_span(y));
      for (std::size_t i = 0; i < d; ++i) {
        inc[s][i] = y[i] - px[i];
        moved = std::max(moved, std::fabs(px[i] - x[i]));
        scale = std::max(scale, std::fabs(px[i]));
      }
      x = std::move(px);
    }
    if (moved <= 1e-12 * (1.0 + scale)) return true;
  }
  return false;
}

bool ball_inside_set(const FeasibleSet& set, std::span<const double> center,
                     double D) {
  switch (set.kind) {
    case FeasibleSet::Kind::full_space:
      return true;
    case FeasibleSet::Kind::box: {
      for (std::size_t i = 0; i < set.dim; ++i) {
        // sup |x_i| over any lp unit ball (p <= 2) is 1.
        if (center[i] - D < set.lower[i] || center[i] + D > set.upper[i])
          return false;
      }
      return true;
    }
    case FeasibleSet::Kind::ball: {
      Vec diff(set.dim);
      kernels::sub(as_span(diff), center, as_span(set.center));
      // ||.||_2 <= ||.||_p for p <= 2, so the Euclidean D-ball encloses the
      // constraint ball; sufficient condition only.
      return std::sqrt(kernels::sum_sq(as_span(diff))) + D <= set.radius;
    }
  }
  return false;
}

}  // namespace

double restricted_merit(const OperatorProblem& p, const NormGeometry& /*g*/,
                        const FeasibleSet& set, std::span<const double> w_tilde,
                        const MeritSpec& spec) {
  if (!(spec.D > 0.0)) throw invalid_input("restricted_merit: D must be > 0");
  if (w_tilde.size() != p.dim)
    throw invalid_input("restricted_merit: dimension mismatch");
  if (!set.contains(w_tilde))
    throw invalid_input("restricted_merit: w_tilde is not feasible");

  const std::size_t d = p.dim;
  Vec F = p(w_tilde);
  const double Fnorm2 = std::sqrt(kernels::sum_sq(as_span(F)));
  if (Fnorm2 == 0.0) return 0.0;

  const NormGeometry& c = spec.constraint_norm;
  const bool two_ball = spec.extra_ball_center.has_value();

  if (!two_ball && ball_inside_set(set, w_tilde, spec.D))
    return spec.D * dual_norm(c, as_span(F));

  // Maximize the linear objective <F, w_tilde - w> by projected ascent on
  // w with Dykstra-corrected projections onto the pieces.
  std::vector<std::function<Vec(std::span<const double>)>> projs;
  projs.push_back([&](std::span<const double> x) { return project(set, x); });
  Vec center(w_tilde.begin(), w_tilde.end());
  projs.push_back([&, center](std::span<const double> x) {
    return project_norm_ball(c, as_span(center), spec.D, x);
  });
  if (two_ball) {
    const Vec& c2 = *spec.extra_ball_center;
    if (c2.size() != d) throw invalid_input("restricted_merit: extra ball dim");
    projs.push_back([&, c2](std::span<const double> x) {
      return project_norm_ball(c, as_span(c2), spec.D, x);
    });
  }

  // A Dykstra pass that hits the cycle cap is still usable when the point
  // it produced is feasible to working precision.
  auto feasible_enough = [&](const Vec& x) {
    if (!set.contains(as_span(x), 1e-8)) return false;
    Vec rel(d);
    kernels::sub(as_span(rel), as_span(x), w_tilde);
    if (norm(c, as_span(rel)) > spec.D + 1e-8) return false;
    if (two_ball) {
      kernels::sub(as_span(rel), as_span(x), as_span(*spec.extra_ball_center));
      if (norm(c, as_span(rel)) > spec.D + 1e-8) return false;
    }
    return true;
  };

  Vec w(w_tilde.begin(), w_tilde.end());
  if (!dykstra(projs, w, spec.dykstra_max_cycles) && !feasible_enough(w))
    throw numeric_failure("restricted_merit: Dykstra stalled finding a start", 0.0);

  auto objective = [&](const Vec& x) {
    double v = 0.0;
    for (std::size_t i = 0; i < d; ++i) v += F[i] * (w_tilde[i] - x[i]);
    return v;
  };

  const double eta = spec.D / Fnorm2;
  double best = objective(w);
  Vec cand(d);
  long long stalled = 0;
  for (long long it = 0; it < spec.inner_max_iters; ++it) {
    kernels::add_scaled(as_span(cand), as_span(w), -eta, as_span(F));
    Vec next = cand;
    if (!dykstra(projs, next, spec.dykstra_max_cycles) && !feasible_enough(next))
      throw numeric_failure(
          "restricted_merit: projection stalled; value is a lower bound", best);
    w = std::move(next);
    const double val = objective(w);
    if (val > best + spec.inner_tol * (1.0 + std::fabs(best))) {
      best = val;
      stalled = 0;
    } else {
      best = std::max(best, val);
      if (++stalled >= 50) break;
    }
  }
  return best;
}

double natural_residual(const OperatorProblem& p, const NormGeometry& g,
                        const FeasibleSet& set, std::span<const double> w,
                        double eta) {
  if (!(eta > 0.0)) throw invalid_input("natural_residual: eta must be > 0");
  if (!set.contains(w)) throw invalid_input("natural_residual: w not feasible");
  Vec F = p(w);
  Vec scaled(F.size());
  kernels::scale(as_span(scaled), as_span(F), eta);
  Vec w_prox = prox_map(g, set, w, as_span(scaled));
  Vec diff(F.size());
  kernels::sub(as_span(diff), w, as_span(w_prox));
  const double n = norm(g, as_span(diff));
  return n * n;
}

double merit_from_residual(double r, double eta, double L, double delta,
                           double gamma, double D) {
  if (!(eta > 0.0)) throw invalid_input("merit_from_residual: eta must be > 0");
  if (r < 0.0) throw invalid_input("merit_from_residual: r must be >= 0");
  return (L + delta / (eta * gamma)) * D * std::sqrt(r);
}

double constant_C0(double alpha, double gamma, double delta) {
  return (1.0 + delta / (alpha * gamma)) * std::sqrt(8.0 * alpha / gamma);
}

double constant_C1(double alpha, double gamma, double delta) {
  return 4.0 * (1.0 + delta / (alpha * gamma)) * std::sqrt(alpha / gamma);
}

double schedule_A(double alpha, double gamma, double L, double sigma, long long k) {
  if (k < 0) throw invalid_input("schedule_A: k >= 0");
  if (sigma == 0.0) return alpha * gamma * double(k) / L;
  return (std::pow(1.0 + alpha * gamma * sigma / L, double(k)) - 1.0) / sigma;
}

double schedule_a(double alpha, double gamma, double L, double sigma, long long k) {
  if (k < 0) throw invalid_input("schedule_a: k >= 0");
  const long long kk = k == 0 ? 1 : k;  // a_0 := a_1
  return (alpha * gamma / L) * std::pow(1.0 + alpha * gamma * sigma / L, double(kk - 1));
}

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw invalid_input(msg);
}

}  // namespace

double theoretical_bound(const BoundSpec& b) {
  const double ag = b.alpha * b.gamma;
  switch (b.kind) {
    case BoundKind::thm1_merit:
    case BoundKind::thm1_dist: {
      require(b.alpha > 0 && b.L > 0 && b.K >= 1, "theoretical_bound: thm1 params");
      const double A = schedule_A(b.alpha, b.gamma, b.L, b.sigma, b.K - 1);
      const double a1 = ag / b.L;
      const double core =
          constant_C0(b.alpha, b.gamma, b.delta) * b.dist0 * std::sqrt(b.L / (A + a1));
      if (b.kind == BoundKind::thm1_merit) {
        require(b.D > 0, "theoretical_bound: thm1_merit needs D");
        return core * b.D;
      }
      require(b.sigma > 0, "theoretical_bound: thm1_dist needs sigma > 0");
      return core / b.sigma;
    }
    case BoundKind::prop1_merit:
    case BoundKind::prop1_dist: {
      require(b.alpha > 0 && b.L > 0 && b.K >= 1 && b.sigma > 0,
              "theoretical_bound: prop1 params");
      const double aK1 = schedule_a(b.alpha, b.gamma, b.L, b.sigma, b.K - 1);
      const double core =
          constant_C0(b.alpha, b.gamma, b.delta) * b.dist0 * std::sqrt(b.L / aK1);
      if (b.kind == BoundKind::prop1_merit) {
        require(b.D > 0, "theoretical_bound: prop1_merit needs D");
        return core * b.D;
      }
      return core / b.sigma;
    }
    case BoundKind::cor1: {
      require(b.alpha > 0 && b.L > 0 && b.K >= 1 && b.sigma > 0 && b.D > 0,
              "theoretical_bound: cor1 params");
      const double eps = b.sigma;
      const double den =
          std::pow(1.0 + ag * eps / b.L, double(b.K - 1)) - 1.0 + ag / b.L;
      return b.D * eps + b.D * constant_C0(b.alpha, b.gamma, b.delta) * b.dist0 *
                             std::sqrt(b.L * eps / den);
    }
    case BoundKind::cor2: {
      // The statement's exponent is K-1; the proof derives a_{K-1} with
      // exponent K-2. We evaluate the weaker proof form.
      require(b.alpha > 0 && b.L > 0 && b.K >= 2 && b.sigma > 0 && b.D > 0,
              "theoretical_bound: cor2 params");
      const double eps = b.sigma;
      const double den = ag * std::pow(1.0 + ag * eps / b.L, double(b.K - 2));
      return b.D * eps + b.D * constant_C0(b.alpha, b.gamma, b.delta) * b.L *
                             b.dist0 * std::sqrt(1.0 / den);
    }
    case BoundKind::thm2_dist: {
      require(b.alpha > 0 && b.L > 0 && b.K >= 1 && b.sigma > 0,
              "theoretical_bound: thm2_dist params");
      const double lead =
          32.0 * b.L * b.L / (b.sigma * b.sigma * ag * ag * double(b.K + 1) * double(b.K + 1));
      return lead * (8.0 * b.alpha * b.s * b.s * double(b.K) / (b.L * b.L) +
                     b.dist0 * b.dist0 / (2.0 * b.gamma));
    }
    case BoundKind::propV2_merit: {
      require(b.alpha > 0 && b.L > 0 && b.K >= 1 && b.sigma > 0 && b.D > 0,
              "theoretical_bound: propV2 params");
      const double A = schedule_A(b.alpha, b.gamma, b.L, b.sigma, b.K - 1);
      const double a1 = ag / b.L;
      const double core = b.dist0 * b.dist0 / (b.L * (A + a1)) + b.s * b.s / (b.L * b.L);
      return constant_C1(b.alpha, b.gamma, b.delta) * b.L * b.D * std::sqrt(core) +
             b.L * b.L * core + b.s * b.s / (2.0 * b.L * b.L);
    }
    case BoundKind::qnrf_conversion:
      return merit_from_residual(b.residual, b.eta, b.L, b.delta, b.gamma, b.D);
  }
  throw invalid_input("theoretical_bound: unknown kind");
}

FitResult fit_rate(std::span<const double> k, std::span<const double> value,
                   FitModel model) {
  if (k.size() != value.size()) throw invalid_input("fit_rate: size mismatch");
  if (k.size() < 10) throw invalid_input("fit_rate: need at least 10 records");
  const std::size_t n = k.size();
  Vec x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(value[i] > 0.0))
      throw invalid_input("fit_rate: nonpositive value in fit window");
    if (model == FitModel::power && !(k[i] > 0.0))
      throw invalid_input("fit_rate: nonpositive k in power fit");
    x[i] = model == FitModel::power ? std::log(k[i]) : k[i];
    y[i] = std::log(value[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  const double intercept = my - slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    ss_res += r * r;
  }
  FitResult out;
  out.coefficient = std::exp(intercept);
  out.rate = model == FitModel::power ? slope : std::exp(slope);
  out.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return out;
}

FitResult fit_rate(const IterateTrace& trace, TraceField field, FitModel model) {
  Vec k, v;
  for (const auto& r : trace.records) {
    double val;
    if (field == TraceField::residual_sum) {
      val = r.residual_sum;
    } else {
      if (!r.dist) continue;
      val = *r.dist;
    }
    k.push_back(double(r.k));
    v.push_back(val);
  }
  return fit_rate(as_span(k), as_span(v), model);
}

}  // namespace optde
