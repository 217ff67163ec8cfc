#pragma once

// Norm geometries (Euclidean and lp, 1 < p <= 2), their dual norms, the
// gradient map of 0.5*||.||^2 and its inverse, the induced Bregman
// divergence, Euclidean projections onto the supported feasible sets, and
// the prox-mapping
//
//   prox(v, w) = argmin_{z in W} { <w, z> + 1/(2*gamma) ||z - v||^2 }.
//
// All functions are pure and safe to call concurrently.

#include <cstddef>
#include <optional>

#include "optde/common.hpp"

namespace optde {

enum class NormKind { euclidean, lp };

struct NormGeometry {
  NormKind kind = NormKind::euclidean;
  double p = 2.0;      // lp exponent, 1 < p <= 2
  double gamma = 1.0;  // strong-convexity modulus of 0.5*||.||^2
  double delta = 1.0;  // bound on the dual norm of the gradient map

  static NormGeometry euclidean() { return {}; }
  static NormGeometry lp(double p);

  // Dual exponent q with 1/p + 1/q = 1.
  double q() const { return p / (p - 1.0); }
};

struct FeasibleSet {
  enum class Kind { full_space, box, ball };

  Kind kind = Kind::full_space;
  std::size_t dim = 0;
  Vec lower, upper;    // box bounds
  Vec center;          // ball center
  double radius = 0.0; // ball radius (Euclidean)

  static FeasibleSet full_space(std::size_t d);
  static FeasibleSet box(Vec lower, Vec upper);
  static FeasibleSet ball(Vec center, double radius);

  bool contains(std::span<const double> x, double tol = 1e-9) const;
};

double norm(const NormGeometry& g, std::span<const double> x);
double dual_norm(const NormGeometry& g, std::span<const double> y);

void grad_half_norm_sq(const NormGeometry& g, std::span<const double> x,
                       std::span<double> out);
Vec grad_half_norm_sq(const NormGeometry& g, std::span<const double> x);

void inv_grad_half_norm_sq(const NormGeometry& g, std::span<const double> y,
                           std::span<double> out);
Vec inv_grad_half_norm_sq(const NormGeometry& g, std::span<const double> y);

// V_v(w) = 0.5||w||^2 - 0.5||v||^2 - <grad_half_norm_sq(v), w - v>
double bregman(const NormGeometry& g, std::span<const double> v,
               std::span<const double> w);

// Euclidean-nearest point of the set.
void project(const FeasibleSet& set, std::span<const double> x, std::span<double> out);
Vec project(const FeasibleSet& set, std::span<const double> x);

struct ProxOptions {
  double tol = 1e-10;          // gradient-mapping residual threshold
  long long max_iters = 100000;
};

// Closed form for the Euclidean geometry and for lp over the full space;
// projected-gradient inner loop for lp over box/ball.
Vec prox_map(const NormGeometry& g, const FeasibleSet& set,
             std::span<const double> v, std::span<const double> w,
             const ProxOptions& opts = {});

// Euclidean projection onto { z : ||z - center||_g <= radius } in the norm
// of g. Radial shrink for the Euclidean kind; a bisection on the KKT
// multiplier for lp. Used by the merit inner solver.
Vec project_norm_ball(const NormGeometry& g, std::span<const double> center,
                      double radius, std::span<const double> x);

}  // namespace optde
