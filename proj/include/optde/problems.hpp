#pragma once

// VI problem definitions: the built-in instance family, the stochastic
// oracle wrapper, the regularization wrapper that buys a sigma-weak
// solution on monotone problems, and sampled assumption checks.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>

#include "optde/common.hpp"
#include "optde/geometry.hpp"

namespace optde {

struct CallCounter {
  long long deterministic_calls = 0;
  long long stochastic_samples = 0;
  long long oracle_calls = 0;  // batched oracle invocations
};

enum class ProblemClass {
  monotone,
  strongly_monotone,
  pseudomonotone,
  weak_solution_only,
  sigma_weak,
};

struct OperatorProblem {
  std::size_t dim = 0;
  std::function<void(std::span<const double>, std::span<double>)> eval;
  double lipschitz = 0.0;
  double sigma = 0.0;  // coherence parameter; 0 asserts only a weak solution
  std::optional<Vec> known_solution;
  ProblemClass class_tag = ProblemClass::monotone;
  // Witness (u, v) with <F(u)-F(v), u-v> < 0, when one was found.
  std::optional<std::pair<Vec, Vec>> non_monotone_certificate;

  void operator()(std::span<const double> w, std::span<double> out,
                  CallCounter* counter = nullptr) const;
  Vec operator()(std::span<const double> w, CallCounter* counter = nullptr) const;

  bool is_monotone_class() const {
    return class_tag == ProblemClass::monotone ||
           class_tag == ProblemClass::strongly_monotone;
  }
};

// Canonical minimax coupling min_x max_y c * x'y lifted to w = (x, y).
OperatorProblem make_bilinear(std::size_t d, double coupling);

// F(w) = (mu I + S)(w - w*) with S random antisymmetric of spectral scale
// skew_scale and a random w*.
OperatorProblem make_strongly_monotone_quadratic(std::size_t d, double mu,
                                                 double skew_scale,
                                                 std::uint64_t seed);

// F(x, y) = (2xy^2, -2yx^2), the operator of min_x max_y x^2 y^2. Only
// locally Lipschitz; the stored constant is the numerical sup of the
// Jacobian norm over [-box_halfwidth, box_halfwidth]^2 and experiments
// should stay inside that box.
OperatorProblem make_xy_squared(double box_halfwidth = 2.0);

// Planar non-monotone instance with w* = 0: a radially damped rotation
// F(w) = (0.5 + 0.5/(1+||w||^2)) R(theta) w. Construction self-checks
// <F(w), w> >= 0 by sampling and records a non-monotonicity witness.
OperatorProblem make_pseudomonotone_2d();

// F + (epsilon/gamma) * grad_half_norm_sq(. - w0). Monotone inputs gain
// sigma = epsilon (class sigma_weak).
OperatorProblem regularize(const OperatorProblem& p, double epsilon, Vec w0,
                           const NormGeometry& g);

class StochasticOracle {
 public:
  // Per-draw noise is isotropic Gaussian with E||z||_2^2 = noise_scale^2;
  // sample() returns the mean over the batch.
  StochasticOracle(OperatorProblem base, double noise_scale, long long batch,
                   std::uint64_t seed);

  const OperatorProblem& base() const { return base_; }
  double noise_scale() const { return s_; }
  long long batch() const { return m_; }
  std::uint64_t seed() const { return seed_; }

  Vec sample(std::span<const double> w, CallCounter* counter,
             long long batch_override = 0);

  // The run RNG; solvers draw their output index from the stream's final
  // position for reproducibility.
  std::mt19937_64& rng() { return rng_; }
  void reset();

 private:
  OperatorProblem base_;
  double s_;
  long long m_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

Vec sample_operator(StochasticOracle& o, std::span<const double> w,
                    CallCounter& counter);

struct AssumptionOptions {
  long long n_samples = 10000;
  Vec region_lo, region_hi;  // sampling box; defaults to [-5, 5]^d
  Vec w0;                    // anchor of the Assumption-4 Bregman terms
  std::uint64_t seed = 20240901;
  double tol = 1e-8;
};

struct AssumptionReport {
  double max_lipschitz_ratio = 0.0;
  bool lipschitz_ok = false;
  bool has_solution = false;
  double min_weak_slack = 0.0;  // min <F(w), w - w*>
  bool weak_ok = false;
  double min_coherence_slack = 0.0;  // Assumption-4 margin, sigma > 0 only
  bool coherence_ok = false;
  bool pass = false;
};

AssumptionReport verify_assumptions(const OperatorProblem& p,
                                    const NormGeometry& g,
                                    const FeasibleSet& set,
                                    const AssumptionOptions& opts = {});

}  // namespace optde
