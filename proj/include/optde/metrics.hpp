#pragma once

// Accuracy measures and closed-form rate bounds: the restricted strong
// merit function, the quadratic natural residual and its merit conversion,
// the theorem/corollary right-hand sides, and empirical rate fitting.

#include <optional>

#include "optde/common.hpp"
#include "optde/geometry.hpp"
#include "optde/problems.hpp"
#include "optde/solvers.hpp"

namespace optde {

struct MeritSpec {
  double D = 1.0;
  NormGeometry constraint_norm;  // norm of the ||w - w_tilde|| <= D ball
  double inner_tol = 1e-9;
  long long inner_max_iters = 2000;
  long long dykstra_max_cycles = 200;
  // Two-ball restriction: additionally require ||w - center|| <= D.
  std::optional<Vec> extra_ball_center;
};

// sup of <F(w_tilde), w_tilde - w> over feasible w within distance D of
// w_tilde (and of the extra center when set). Closed form when the whole
// ball is feasible, projected ascent with Dykstra projections otherwise.
double restricted_merit(const OperatorProblem& p, const NormGeometry& g,
                        const FeasibleSet& set, std::span<const double> w_tilde,
                        const MeritSpec& spec);

// r_eta(w) = ||w - prox(w, eta F(w))||^2 in the geometry norm.
double natural_residual(const OperatorProblem& p, const NormGeometry& g,
                        const FeasibleSet& set, std::span<const double> w,
                        double eta);

// (L + delta/(eta*gamma)) * D * sqrt(r): a bound on the restricted merit of
// the proxied point.
double merit_from_residual(double r, double eta, double L, double delta,
                           double gamma, double D);

enum class BoundKind {
  thm1_merit,
  thm1_dist,
  prop1_merit,
  prop1_dist,
  cor1,
  cor2,
  thm2_dist,
  propV2_merit,
  qnrf_conversion,
};

struct BoundSpec {
  BoundKind kind = BoundKind::thm1_merit;
  double alpha = 0.0;
  double gamma = 1.0;
  double delta = 1.0;
  double L = 0.0;
  double sigma = 0.0;  // epsilon for cor1/cor2
  double s = 0.0;      // oracle noise scale
  double D = 0.0;
  double dist0 = 0.0;  // ||w0 - w*||
  long long K = 0;
  double eta = 0.0;      // qnrf only
  double residual = 0.0; // qnrf only
};

// C0 = (1 + delta/(alpha*gamma)) * sqrt(8 alpha / gamma)
double constant_C0(double alpha, double gamma, double delta);
// C1 = 4 (1 + delta/(alpha*gamma)) * sqrt(alpha / gamma)
double constant_C1(double alpha, double gamma, double delta);

// A_k: alpha*gamma*k/L when sigma = 0, geometric sum otherwise.
double schedule_A(double alpha, double gamma, double L, double sigma, long long k);
// a_k = (alpha*gamma/L)(1 + alpha*gamma*sigma/L)^(k-1), with a_0 := a_1.
double schedule_a(double alpha, double gamma, double L, double sigma, long long k);

double theoretical_bound(const BoundSpec& spec);

enum class FitModel { power, geometric };
enum class TraceField { residual_sum, distance };

struct FitResult {
  double coefficient = 0.0;
  double rate = 0.0;  // exponent (power) or ratio (geometric)
  double r2 = 0.0;
};

FitResult fit_rate(std::span<const double> k, std::span<const double> value,
                   FitModel model);
FitResult fit_rate(const IterateTrace& trace, TraceField field, FitModel model);

}  // namespace optde
