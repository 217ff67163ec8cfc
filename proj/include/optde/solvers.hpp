#pragma once

// Single-call optimistic dual extrapolation (deterministic and stochastic),
// the regularized pipeline for monotone problems, and two-call baselines
// (extragradient, dual extrapolation) plus gradient descent-ascent.
//
// Operator accounting contract: after K iterations the counter reads
// exactly K+1 evaluations for optde/soptde (batched for the oracle) and 2K
// for eg/de; gda reads K.

#include <cstdint>
#include <functional>
#include <optional>

#include "optde/common.hpp"
#include "optde/geometry.hpp"
#include "optde/problems.hpp"

namespace optde {

enum class ScheduleVariant { det, sto_conservative, sto_aggressive };

// a_k as a function of A_{k-1}: alpha*gamma*(1 + sigma*A_prev)/L for the
// deterministic and aggressive stochastic settings, the square-root form
// for the conservative stochastic setting.
double step_schedule(ScheduleVariant variant, double alpha, double gamma,
                     double L, double sigma, double A_prev);

// Largest alpha permitted by each variant's step-2 constraint.
double default_alpha(ScheduleVariant variant, double gamma);

struct TraceRecord {
  long long k = 0;
  double a_k = 0.0;
  double A_k = 0.0;
  // ||w_k - z_{k-1}|| + ||w_{k-1} - z_{k-1}|| in the geometry norm.
  double residual_sum = 0.0;
  std::optional<double> dist;   // ||w_k - w*|| when a solution is known
  std::optional<double> merit;  // when evaluated at this record
  long long calls = 0;          // cumulative operator/oracle calls
};

struct IterateTrace {
  std::vector<TraceRecord> records;
};

// 1-based position of the smallest residual_sum; ties break to the
// earliest record.
std::size_t select_best_iterate(const IterateTrace& trace);

struct SolverConfig {
  double alpha = 0.0;  // <= 0 selects the variant default
  long long iters = 1;
  Vec w0;
  std::optional<double> sigma_override;  // overrides problem.sigma
  double merit_D = 0.0;                  // recorded for reporting only
  long long record_every = 1;
  // Merit evaluation cadence: with merit_fn set, merit is evaluated at
  // new-best rows and the final row, plus every merit_every iterations
  // when merit_every > 0.
  long long merit_every = 0;
  std::function<double(std::span<const double>)> merit_fn;
  // Distance column target; defaults to the problem's known solution.
  std::optional<Vec> dist_target;
  // Per-iteration observer (testing hook).
  std::function<void(long long, std::span<const double>)> on_iterate;
  // SOptDE version 2: scale the batch by ceil(A_{k-1}/a_1) per iteration.
  bool v2_growing_batch = true;
};

struct RunResult {
  Vec best;              // argmin residual_sum (optde/eg/de), sampled iterate (soptde)
  Vec last;              // w_K
  long long best_k = 0;  // iteration index of `best` (1-based)
  IterateTrace trace;
  bool diverged = false;    // gda only; other solvers throw
  Vec final_dual;           // g_K, when the solver maintains one
  double best_residual = 0.0;
};

// Thrown when an iterate leaves the finite range; carries the partial trace.
class divergence_error : public std::runtime_error {
 public:
  divergence_error(const std::string& what, IterateTrace trace, long long at_k)
      : std::runtime_error(what), trace(std::move(trace)), at_k(at_k) {}
  IterateTrace trace;
  long long at_k;
};

RunResult optde_run(const OperatorProblem& p, const NormGeometry& g,
                    const FeasibleSet& set, const SolverConfig& cfg,
                    CallCounter& counter);

enum class SoptdeVariant { conservative, aggressive };

RunResult soptde_run(StochasticOracle& oracle, const NormGeometry& g,
                     const FeasibleSet& set, const SolverConfig& cfg,
                     SoptdeVariant variant, CallCounter& counter);

RunResult extragradient_run(const OperatorProblem& p, const NormGeometry& g,
                            const FeasibleSet& set, const SolverConfig& cfg,
                            CallCounter& counter);

RunResult dual_extrapolation_run(const OperatorProblem& p, const NormGeometry& g,
                                 const FeasibleSet& set, const SolverConfig& cfg,
                                 CallCounter& counter);

// Plain forward iteration w <- project(w - eta F(w)), eta = alpha/L.
// Divergence sets the flag instead of throwing.
RunResult gda_run(const OperatorProblem& p, const NormGeometry& g,
                  const FeasibleSet& set, const SolverConfig& cfg,
                  CallCounter& counter);

// Runs optde on regularize(p, epsilon, w0, g) with sigma = epsilon. The
// trace's merit/dist columns refer to the ORIGINAL problem.
RunResult monotone_solve_via_regularization(const OperatorProblem& p,
                                            const NormGeometry& g,
                                            const FeasibleSet& set,
                                            double epsilon,
                                            const SolverConfig& cfg,
                                            CallCounter& counter);

}  // namespace optde
