#include "optde/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "optde/kernels.hpp"

namespace optde {

double step_schedule(ScheduleVariant variant, double alpha, double gamma,
                     double L, double sigma, double A_prev) {
  if (!(L > 0.0)) throw invalid_input("step_schedule: L must be > 0");
  if (A_prev < 0.0) throw invalid_input("step_schedule: A_prev must be >= 0");
  switch (variant) {
    case ScheduleVariant::det:
    case ScheduleVariant::sto_aggressive:
      return alpha * gamma * (1.0 + sigma * A_prev) / L;
    case ScheduleVariant::sto_conservative:
      return alpha * gamma * std::sqrt(1.0 + sigma * A_prev) / L;
  }
  throw invalid_input("step_schedule: unknown variant");
}

double default_alpha(ScheduleVariant variant, double gamma) {
  switch (variant) {
    case ScheduleVariant::det:
      return std::min(1.0 / (4.0 * std::sqrt(2.0)),
                      std::sqrt(3.0) / (4.0 * std::sqrt(gamma)));
    case ScheduleVariant::sto_conservative:
      return std::min(gamma / 32.0, 1.0 / 16.0);
    case ScheduleVariant::sto_aggressive:
      return std::min(1.0 / 8.0, std::sqrt(3.0) / (4.0 * std::sqrt(2.0 * gamma)));
  }
  throw invalid_input("default_alpha: unknown variant");
}

std::size_t select_best_iterate(const IterateTrace& trace) {
  if (trace.records.empty())
    throw invalid_input("select_best_iterate: empty trace");
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    if (trace.records[i].residual_sum < trace.records[best].residual_sum)
      best = i;
  return best + 1;
}

namespace {

constexpr double kDivergenceLimit = 1e12;

struct RunBookkeeping {
  RunBookkeeping(const SolverConfig& cfg, const NormGeometry& g,
                 const std::optional<Vec>& dist_target, CallCounter& counter)
      : cfg(cfg), g(g), dist_target(dist_target), counter(counter) {}

  const SolverConfig& cfg;
  const NormGeometry& g;
  const std::optional<Vec>& dist_target;
  CallCounter& counter;

  IterateTrace trace;
  double best_res = std::numeric_limits<double>::infinity();
  Vec best_w;
  long long best_k = 0;

  bool observe(long long k, double a, double A, double res, const Vec& w) {
    if (cfg.on_iterate) cfg.on_iterate(k, as_span(w));
    bool new_best = res < best_res;
    if (new_best) {
      best_res = res;
      best_w = w;
      best_k = k;
    }
    const bool due = cfg.record_every > 0 && k % cfg.record_every == 0;
    if (due || new_best || k == cfg.iters) {
      TraceRecord rec;
      rec.k = k;
      rec.a_k = a;
      rec.A_k = A;
      rec.residual_sum = res;
      if (dist_target) {
        Vec diff(w.size());
        kernels::sub(as_span(diff), as_span(w), as_span(*dist_target));
        rec.dist = norm(g, as_span(diff));
      }
      const bool merit_due =
          cfg.merit_fn &&
          (new_best || k == cfg.iters ||
           (cfg.merit_every > 0 && k % cfg.merit_every == 0));
      if (merit_due) rec.merit = cfg.merit_fn(as_span(w));
      rec.calls = counter.deterministic_calls + counter.oracle_calls;
      trace.records.push_back(rec);
    }
    return new_best;
  }

  void check_finite(const Vec& w, long long k) {
    if (!kernels::all_finite(as_span(w)) ||
        std::sqrt(kernels::sum_sq(as_span(w))) > kDivergenceLimit)
      throw divergence_error("iterate diverged at k=" + std::to_string(k),
                             std::move(trace), k);
  }
};

double resolve_alpha(const SolverConfig& cfg, ScheduleVariant variant,
                     double gamma) {
  const double cap = default_alpha(variant, gamma);
  if (cfg.alpha <= 0.0) return cap;
  if (variant == ScheduleVariant::sto_conservative) {
    // Algorithm fixes alpha exactly in this setting.
    if (std::fabs(cfg.alpha - cap) > 1e-12 * cap)
      throw invalid_input("soptde conservative: alpha is fixed to min(gamma/32, 1/16)");
    return cap;
  }
  if (cfg.alpha > cap * (1.0 + 1e-12))
    throw invalid_input("alpha exceeds the step-2 constraint for this variant");
  return cfg.alpha;
}

void validate_start(const SolverConfig& cfg, const OperatorProblem& p,
                    const FeasibleSet& set) {
  if (cfg.iters < 1) throw invalid_input("solver: iters must be >= 1");
  if (cfg.w0.size() != p.dim) throw invalid_input("solver: w0 dimension mismatch");
  if (!set.contains(as_span(cfg.w0)))
    throw invalid_input("solver: w0 is not feasible");
}

std::optional<Vec> resolve_dist_target(const SolverConfig& cfg,
                                       const OperatorProblem& p) {
  if (cfg.dist_target) return cfg.dist_target;
  return p.known_solution;
}

}  // namespace

RunResult optde_run(const OperatorProblem& p, const NormGeometry& g,
                    const FeasibleSet& set, const SolverConfig& cfg,
                    CallCounter& counter) {
  validate_start(cfg, p, set);
  const double sigma = cfg.sigma_override.value_or(p.sigma);
  if (sigma < 0.0) throw invalid_input("optde_run: sigma must be >= 0");
  const double alpha = resolve_alpha(cfg, ScheduleVariant::det, g.gamma);
  const double L = p.lipschitz;
  const std::size_t d = p.dim;

  const std::optional<Vec> dist_target = resolve_dist_target(cfg, p);
  RunBookkeeping bk(cfg, g, dist_target, counter);

  Vec w = cfg.w0, z = cfg.w0, w_prev(d), z_prev(d);
  Vec g_acc(d, 0.0), scaled(d), grad_reg(d), diff(d);
  Vec F_prev = p(as_span(w), &counter);  // cached: next extrapolation reuses it
  double A = 0.0;

  for (long long k = 1; k <= cfg.iters; ++k) {
    const double a = step_schedule(ScheduleVariant::det, alpha, g.gamma, L, sigma, A);
    A += a;

    w_prev = w;
    z_prev = z;
    kernels::scale(as_span(scaled), as_span(F_prev), alpha / L);
    w = prox_map(g, set, as_span(z_prev), as_span(scaled));
    bk.check_finite(w, k);

    Vec F_w = p(as_span(w), &counter);
    kernels::sub(as_span(diff), as_span(w), as_span(cfg.w0));
    grad_half_norm_sq(g, as_span(diff), as_span(grad_reg));
    for (std::size_t i = 0; i < d; ++i)
      g_acc[i] += a * (F_w[i] - (sigma / g.gamma) * grad_reg[i]);
    kernels::scale(as_span(scaled), as_span(g_acc), 1.0 / (1.0 + sigma * A));
    z = prox_map(g, set, as_span(cfg.w0), as_span(scaled));

    kernels::sub(as_span(diff), as_span(w), as_span(z_prev));
    double res = norm(g, as_span(diff));
    kernels::sub(as_span(diff), as_span(w_prev), as_span(z_prev));
    res += norm(g, as_span(diff));

    bk.observe(k, a, A, res, w);
    F_prev = std::move(F_w);
  }

  RunResult out;
  out.best = std::move(bk.best_w);
  out.best_k = bk.best_k;
  out.best_residual = bk.best_res;
  out.last = std::move(w);
  out.trace = std::move(bk.trace);
  out.final_dual = std::move(g_acc);
  return out;
}

RunResult soptde_run(StochasticOracle& oracle, const NormGeometry& g,
                     const FeasibleSet& set, const SolverConfig& cfg,
                     SoptdeVariant variant, CallCounter& counter) {
  const OperatorProblem& p = oracle.base();
  validate_start(cfg, p, set);
  const double sigma = cfg.sigma_override.value_or(p.sigma);
  if (sigma < 0.0) throw invalid_input("soptde_run: sigma must be >= 0");
  const ScheduleVariant sched = variant == SoptdeVariant::conservative
                                    ? ScheduleVariant::sto_conservative
                                    : ScheduleVariant::sto_aggressive;
  const double alpha = resolve_alpha(cfg, sched, g.gamma);
  const double L = p.lipschitz;
  const std::size_t d = p.dim;
  const double a1 = alpha * g.gamma / L;

  const std::optional<Vec> dist_target = resolve_dist_target(cfg, p);
  RunBookkeeping bk(cfg, g, dist_target, counter);

  Vec w = cfg.w0, z = cfg.w0, w_prev(d), z_prev(d);
  Vec g_acc(d, 0.0), scaled(d), grad_reg(d), diff(d);
  Vec F_prev = oracle.sample(as_span(w), &counter);
  double A = 0.0;

  std::vector<Vec> iterates;
  std::vector<double> weights;
  iterates.reserve(cfg.iters);
  weights.reserve(cfg.iters);

  for (long long k = 1; k <= cfg.iters; ++k) {
    const double A_prev = A;
    const double a = step_schedule(sched, alpha, g.gamma, L, sigma, A_prev);
    A += a;

    // Extrapolation weight: alpha^2*gamma/(L^2 a_k) for the conservative
    // setting, alpha/L for the aggressive one.
    const double weight = variant == SoptdeVariant::conservative
                              ? alpha * alpha * g.gamma / (L * L * a)
                              : alpha / L;
    w_prev = w;
    z_prev = z;
    kernels::scale(as_span(scaled), as_span(F_prev), weight);
    w = prox_map(g, set, as_span(z_prev), as_span(scaled));
    bk.check_finite(w, k);

    long long batch_override = 0;
    if (variant == SoptdeVariant::aggressive && cfg.v2_growing_batch && sigma > 0.0)
      batch_override = oracle.batch() *
                       std::max<long long>(1, (long long)std::ceil(A_prev / a1));
    Vec F_w = oracle.sample(as_span(w), &counter, batch_override);

    kernels::sub(as_span(diff), as_span(w), as_span(cfg.w0));
    grad_half_norm_sq(g, as_span(diff), as_span(grad_reg));
    for (std::size_t i = 0; i < d; ++i)
      g_acc[i] += a * (F_w[i] - (sigma / g.gamma) * grad_reg[i]);
    kernels::scale(as_span(scaled), as_span(g_acc), 1.0 / (1.0 + sigma * A));
    z = prox_map(g, set, as_span(cfg.w0), as_span(scaled));

    kernels::sub(as_span(diff), as_span(w), as_span(z_prev));
    double res = norm(g, as_span(diff));
    kernels::sub(as_span(diff), as_span(w_prev), as_span(z_prev));
    res += norm(g, as_span(diff));

    bk.observe(k, a, A, res, w);
    iterates.push_back(w);
    weights.push_back(a);
    F_prev = std::move(F_w);
  }

  // Output index drawn with probability a_k/A_K from the run RNG's final
  // stream position.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(oracle.rng()) * A;
  double cum = 0.0;
  std::size_t pick = weights.size() - 1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (u <= cum) {
      pick = i;
      break;
    }
  }

  RunResult out;
  out.best = iterates[pick];
  out.best_k = (long long)pick + 1;
  out.best_residual = bk.best_res;
  out.last = std::move(w);
  out.trace = std::move(bk.trace);
  out.final_dual = std::move(g_acc);
  return out;
}

RunResult extragradient_run(const OperatorProblem& p, const NormGeometry& g,
                            const FeasibleSet& set, const SolverConfig& cfg,
                            CallCounter& counter) {
  validate_start(cfg, p, set);
  const double alpha = cfg.alpha > 0.0 ? cfg.alpha : 0.5;
  const double L = p.lipschitz;
  const std::size_t d = p.dim;

  const std::optional<Vec> dist_target = resolve_dist_target(cfg, p);
  RunBookkeeping bk(cfg, g, dist_target, counter);

  Vec w = cfg.w0, scaled(d), diff(d);
  for (long long k = 1; k <= cfg.iters; ++k) {
    Vec F_w = p(as_span(w), &counter);
    kernels::scale(as_span(scaled), as_span(F_w), alpha / L);
    Vec u = prox_map(g, set, as_span(w), as_span(scaled));
    Vec F_u = p(as_span(u), &counter);
    kernels::scale(as_span(scaled), as_span(F_u), alpha / L);
    Vec w_next = prox_map(g, set, as_span(w), as_span(scaled));
    bk.check_finite(w_next, k);

    kernels::sub(as_span(diff), as_span(u), as_span(w));
    double res = norm(g, as_span(diff));
    kernels::sub(as_span(diff), as_span(w_next), as_span(u));
    res += norm(g, as_span(diff));

    w = std::move(w_next);
    bk.observe(k, alpha * g.gamma / L, k * alpha * g.gamma / L, res, w);
  }

  RunResult out;
  out.best = std::move(bk.best_w);
  out.best_k = bk.best_k;
  out.best_residual = bk.best_res;
  out.last = std::move(w);
  out.trace = std::move(bk.trace);
  return out;
}

RunResult dual_extrapolation_run(const OperatorProblem& p, const NormGeometry& g,
                                 const FeasibleSet& set, const SolverConfig& cfg,
                                 CallCounter& counter) {
  validate_start(cfg, p, set);
  const double alpha = cfg.alpha > 0.0 ? cfg.alpha : 0.5;
  const double L = p.lipschitz;
  const std::size_t d = p.dim;
  const double a = alpha * g.gamma / L;

  const std::optional<Vec> dist_target = resolve_dist_target(cfg, p);
  RunBookkeeping bk(cfg, g, dist_target, counter);

  Vec g_acc(d, 0.0), scaled(d), diff(d), y(d);
  for (long long k = 1; k <= cfg.iters; ++k) {
    Vec z = prox_map(g, set, as_span(cfg.w0), as_span(g_acc));
    Vec F_z = p(as_span(z), &counter);
    kernels::scale(as_span(scaled), as_span(F_z), alpha / L);
    y = prox_map(g, set, as_span(z), as_span(scaled));
    bk.check_finite(y, k);
    Vec F_y = p(as_span(y), &counter);
    kernels::axpy(a, as_span(F_y), as_span(g_acc));

    kernels::sub(as_span(diff), as_span(y), as_span(z));
    const double res = norm(g, as_span(diff));
    bk.observe(k, a, k * a, res, y);
  }

  RunResult out;
  out.best = std::move(bk.best_w);
  out.best_k = bk.best_k;
  out.best_residual = bk.best_res;
  out.last = std::move(y);
  out.trace = std::move(bk.trace);
  out.final_dual = std::move(g_acc);
  return out;
}

RunResult gda_run(const OperatorProblem& p, const NormGeometry& g,
                  const FeasibleSet& set, const SolverConfig& cfg,
                  CallCounter& counter) {
  validate_start(cfg, p, set);
  const double alpha = cfg.alpha > 0.0 ? cfg.alpha : 0.5;
  const double eta = alpha / p.lipschitz;
  const std::size_t d = p.dim;

  const std::optional<Vec> dist_target = resolve_dist_target(cfg, p);
  RunBookkeeping bk(cfg, g, dist_target, counter);

  RunResult out;
  Vec w = cfg.w0, step(d), next(d), diff(d);
  for (long long k = 1; k <= cfg.iters; ++k) {
    Vec F_w = p(as_span(w), &counter);
    kernels::add_scaled(as_span(step), as_span(w), -eta, as_span(F_w));
    project(set, as_span(step), as_span(next));

    if (!kernels::all_finite(as_span(next)) ||
        std::sqrt(kernels::sum_sq(as_span(next))) > kDivergenceLimit) {
      out.diverged = true;
      break;
    }
    kernels::sub(as_span(diff), as_span(next), as_span(w));
    const double res = norm(g, as_span(diff));
    w = next;
    bk.observe(k, eta, k * eta, res, w);
  }

  out.best = bk.best_w;
  out.best_k = bk.best_k;
  out.best_residual = bk.best_res;
  out.last = std::move(w);
  out.trace = std::move(bk.trace);
  return out;
}

RunResult monotone_solve_via_regularization(const OperatorProblem& p,
                                            const NormGeometry& g,
                                            const FeasibleSet& set,
                                            double epsilon,
                                            const SolverConfig& cfg,
                                            CallCounter& counter) {
  if (!p.is_monotone_class())
    throw invalid_input("monotone_solve_via_regularization: monotone problem required");
  if (!(epsilon > 0.0))
    throw invalid_input("monotone_solve_via_regularization: epsilon must be > 0");
  OperatorProblem reg = regularize(p, epsilon, cfg.w0, g);
  SolverConfig inner = cfg;
  inner.sigma_override = epsilon;
  // Merit/dist stay evaluated against the original problem.
  if (!inner.dist_target && p.known_solution) inner.dist_target = p.known_solution;
  return optde_run(reg, g, set, inner, counter);
}

}  // namespace optde
