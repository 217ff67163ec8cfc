#include "optde/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "optde/kernels.hpp"

namespace optde {

void OperatorProblem::operator()(std::span<const double> w, std::span<double> out,
                                 CallCounter* counter) const {
  if (w.size() != dim || out.size() != dim)
    throw invalid_input("OperatorProblem: dimension mismatch");
  eval(w, out);
  if (counter) counter->deterministic_calls += 1;
}

Vec OperatorProblem::operator()(std::span<const double> w, CallCounter* counter) const {
  Vec out(dim);
  (*this)(w, as_span(out), counter);
  return out;
}

OperatorProblem make_bilinear(std::size_t d, double coupling) {
  if (d < 2 || d % 2 != 0) throw invalid_input("make_bilinear: d must be even");
  if (!(coupling > 0.0)) throw invalid_input("make_bilinear: coupling must be > 0");
  OperatorProblem p;
  p.dim = d;
  const std::size_t h = d / 2;
  p.eval = [h, coupling](std::span<const double> w, std::span<double> out) {
    for (std::size_t i = 0; i < h; ++i) out[i] = coupling * w[h + i];
    for (std::size_t i = 0; i < h; ++i) out[h + i] = -coupling * w[i];
  };
  p.lipschitz = coupling;
  p.sigma = 0.0;
  p.known_solution = Vec(d, 0.0);
  p.class_tag = ProblemClass::monotone;
  return p;
}

namespace {

// out = M w for a row-major dense matrix.
void matvec(const Vec& M, std::size_t d, std::span<const double> w,
            std::span<double> out) {
  for (std::size_t i = 0; i < d; ++i)
    out[i] = kernels::dot(std::span<const double>(M.data() + i * d, d), w);
}

double spectral_norm(const Vec& M, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vec v(d), Mv(d), MtMv(d);
  for (auto& x : v) x = normal(rng);
  double lam = 0.0;
  for (int it = 0; it < 300; ++it) {
    matvec(M, d, as_span(v), as_span(Mv));
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += M[j * d + i] * Mv[j];
      MtMv[i] = s;
    }
    const double n = std::sqrt(kernels::sum_sq(as_span(MtMv)));
    if (n == 0.0) return 0.0;
    kernels::scale(as_span(v), as_span(MtMv), 1.0 / n);
    lam = n;
  }
  return std::sqrt(lam);
}

}  // namespace

OperatorProblem make_strongly_monotone_quadratic(std::size_t d, double mu,
                                                 double skew_scale,
                                                 std::uint64_t seed) {
  if (d < 1) throw invalid_input("make_strongly_monotone_quadratic: d >= 1");
  if (!(mu > 0.0)) throw invalid_input("make_strongly_monotone_quadratic: mu > 0");
  if (skew_scale < 0.0)
    throw invalid_input("make_strongly_monotone_quadratic: skew_scale >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec S(d * d, 0.0);
  if (d > 1 && skew_scale > 0.0) {
    Vec B(d * d);
    for (auto& x : B) x = normal(rng);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) S[i * d + j] = 0.5 * (B[i * d + j] - B[j * d + i]);
    const double sn = spectral_norm(S, d, rng);
    if (sn > 0.0) kernels::scale(as_span(S), as_span(S), skew_scale / sn);
  }
  Vec wstar(d);
  for (auto& x : wstar) x = normal(rng);

  OperatorProblem p;
  p.dim = d;
  p.eval = [S = std::move(S), wstar, mu, d](std::span<const double> w,
                                            std::span<double> out) {
    Vec diff(d);
    kernels::sub(as_span(diff), w, as_span(wstar));
    matvec(S, d, as_span(diff), out);
    kernels::axpy(mu, as_span(diff), out);
  };
  p.lipschitz = mu + skew_scale;
  p.sigma = mu;
  p.known_solution = wstar;
  p.class_tag = ProblemClass::strongly_monotone;
  return p;
}

OperatorProblem make_xy_squared(double box_halfwidth) {
  if (!(box_halfwidth > 0.0)) throw invalid_input("make_xy_squared: box > 0");
  OperatorProblem p;
  p.dim = 2;
  p.eval = [](std::span<const double> w, std::span<double> out) {
    const double x = w[0], y = w[1];
    out[0] = 2.0 * x * y * y;
    out[1] = -2.0 * y * x * x;
  };
  // sup of the Jacobian spectral norm over the box, on a dense grid; the
  // entries are polynomials so corners dominate but we do not rely on it.
  double L = 0.0;
  const int n = 256;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double x = -box_halfwidth + 2.0 * box_halfwidth * i / n;
      const double y = -box_halfwidth + 2.0 * box_halfwidth * j / n;
      // J = [[2y^2, 4xy], [-4xy, -2x^2]]
      const double a = 2 * y * y, b = 4 * x * y, c = -4 * x * y, e = -2 * x * x;
      // spectral norm of a 2x2 via singular values of [[a,b],[c,e]]
      const double t1 = a * a + b * b + c * c + e * e;
      const double det = a * e - b * c;
      const double t2 = std::sqrt(std::max(0.0, t1 * t1 - 4 * det * det));
      L = std::max(L, std::sqrt(0.5 * (t1 + t2)));
    }
  }
  p.lipschitz = L;
  p.sigma = 0.0;
  p.known_solution = Vec{0.0, 0.0};
  p.class_tag = ProblemClass::weak_solution_only;
  return p;
}

OperatorProblem make_pseudomonotone_2d() {
  // Rotation by 80 degrees: <R w, w> = cos(80deg)||w||^2 > 0, so w* = 0 is
  // a weak solution, while the radial damping breaks monotonicity.
  const double theta = 80.0 * std::acos(-1.0) / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  auto F = [cs, sn](std::span<const double> w, std::span<double> out) {
    const double scale = 0.5 + 0.5 / (1.0 + w[0] * w[0] + w[1] * w[1]);
    out[0] = scale * (cs * w[0] - sn * w[1]);
    out[1] = scale * (sn * w[0] + cs * w[1]);
  };

  OperatorProblem p;
  p.dim = 2;
  p.eval = F;
  // ||J|| <= s(r) + r/(1+r)^2 <= 1.25 globally.
  p.lipschitz = 1.25;
  p.sigma = 0.0;
  p.known_solution = Vec{0.0, 0.0};
  p.class_tag = ProblemClass::pseudomonotone;

  // Empirical self-check of <F(w), w> >= 0 plus a non-monotonicity witness.
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  Vec u(2), v(2), Fu(2), Fv(2);
  double worst_pair = std::numeric_limits<double>::infinity();
  Vec bu, bv;
  for (int i = 0; i < 10000; ++i) {
    u = {unif(rng), unif(rng)};
    F(as_span(u), as_span(Fu));
    if (Fu[0] * u[0] + Fu[1] * u[1] < -1e-12)
      throw std::logic_error("make_pseudomonotone_2d: weak-solution check failed");
    v = {unif(rng), unif(rng)};
    F(as_span(v), as_span(Fv));
    const double m = (Fu[0] - Fv[0]) * (u[0] - v[0]) + (Fu[1] - Fv[1]) * (u[1] - v[1]);
    if (m < worst_pair) {
      worst_pair = m;
      bu = u;
      bv = v;
    }
  }
  if (worst_pair < 0.0) p.non_monotone_certificate = std::make_pair(bu, bv);
  return p;
}

OperatorProblem regularize(const OperatorProblem& p, double epsilon, Vec w0,
                           const NormGeometry& g) {
  if (!(epsilon > 0.0)) throw invalid_input("regularize: epsilon must be > 0");
  if (w0.size() != p.dim) throw invalid_input("regularize: w0 dimension mismatch");

  OperatorProblem r;
  r.dim = p.dim;
  const double scale = epsilon / g.gamma;
  r.eval = [base = p.eval, w0 = std::move(w0), g, scale, d = p.dim](
               std::span<const double> w, std::span<double> out) {
    base(w, out);
    Vec diff(d), grad(d);
    kernels::sub(as_span(diff), w, as_span(w0));
    grad_half_norm_sq(g, as_span(diff), as_span(grad));
    kernels::axpy(scale, as_span(grad), out);
  };
  r.lipschitz = p.lipschitz + epsilon * g.delta / g.gamma;
  if (p.is_monotone_class()) {
    r.sigma = epsilon;
    r.class_tag = ProblemClass::sigma_weak;
  } else {
    r.sigma = 0.0;
    r.class_tag = p.class_tag;
  }
  return r;
}

StochasticOracle::StochasticOracle(OperatorProblem base, double noise_scale,
                                   long long batch, std::uint64_t seed)
    : base_(std::move(base)), s_(noise_scale), m_(batch), seed_(seed), rng_(seed) {
  if (s_ < 0.0) throw invalid_input("StochasticOracle: noise_scale >= 0");
  if (m_ < 1) throw invalid_input("StochasticOracle: batch >= 1");
}

void StochasticOracle::reset() { rng_.seed(seed_); }

Vec StochasticOracle::sample(std::span<const double> w, CallCounter* counter,
                             long long batch_override) {
  const long long m = batch_override > 0 ? batch_override : m_;
  const std::size_t d = base_.dim;
  Vec mean = base_(w);
  if (counter) {
    counter->oracle_calls += 1;
    counter->stochastic_samples += m;
  }
  if (s_ == 0.0) return mean;

  // Mean of m draws F(w) + z with E||z||_2^2 = s^2 per draw: accumulate the
  // noise only, coordinate std s/sqrt(d), batch mean scales by 1/m.
  std::normal_distribution<double> normal(0.0, s_ / std::sqrt(double(d)));
  Vec acc(d, 0.0);
  for (long long j = 0; j < m; ++j)
    for (std::size_t i = 0; i < d; ++i) acc[i] += normal(rng_);
  kernels::axpy(1.0 / double(m), as_span(acc), as_span(mean));
  return mean;
}

Vec sample_operator(StochasticOracle& o, std::span<const double> w,
                    CallCounter& counter) {
  return o.sample(w, &counter);
}

AssumptionReport verify_assumptions(const OperatorProblem& p, const NormGeometry& g,
                                    const FeasibleSet& set,
                                    const AssumptionOptions& opts) {
  const std::size_t d = p.dim;
  if (set.dim != d) throw invalid_input("verify_assumptions: set dimension mismatch");
  Vec lo = opts.region_lo.empty() ? Vec(d, -5.0) : opts.region_lo;
  Vec hi = opts.region_hi.empty() ? Vec(d, 5.0) : opts.region_hi;
  Vec w0 = opts.w0.empty() ? Vec(d, 0.0) : opts.w0;
  if (lo.size() != d || hi.size() != d || w0.size() != d)
    throw invalid_input("verify_assumptions: region dimension mismatch");

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](Vec& out) {
    for (std::size_t i = 0; i < d; ++i) out[i] = lo[i] + (hi[i] - lo[i]) * unif(rng);
    Vec pr = project(set, as_span(out));
    out = pr;
  };

  AssumptionReport rep;
  rep.has_solution = p.known_solution.has_value();
  rep.min_weak_slack = std::numeric_limits<double>::infinity();
  rep.min_coherence_slack = std::numeric_limits<double>::infinity();

  Vec u(d), v(d), Fu(d), Fv(d), diffF(d), diffw(d);
  Vec wrel(d), srel(d);
  const Vec* wstar = rep.has_solution ? &*p.known_solution : nullptr;
  if (wstar) kernels::sub(as_span(srel), as_span(*wstar), as_span(w0));

  for (long long i = 0; i < opts.n_samples; ++i) {
    draw(u);
    draw(v);
    p.eval(as_span(u), as_span(Fu));
    p.eval(as_span(v), as_span(Fv));
    kernels::sub(as_span(diffF), as_span(Fu), as_span(Fv));
    kernels::sub(as_span(diffw), as_span(u), as_span(v));
    const double den = norm(g, as_span(diffw));
    if (den > 1e-12)
      rep.max_lipschitz_ratio =
          std::max(rep.max_lipschitz_ratio, dual_norm(g, as_span(diffF)) / den);

    if (wstar) {
      kernels::sub(as_span(diffw), as_span(u), as_span(*wstar));
      const double inner = kernels::dot(as_span(Fu), as_span(diffw));
      rep.min_weak_slack = std::min(rep.min_weak_slack, inner);
      if (p.sigma > 0.0) {
        kernels::sub(as_span(wrel), as_span(u), as_span(w0));
        const double breg = bregman(g, as_span(wrel), as_span(srel)) +
                            bregman(g, as_span(srel), as_span(wrel));
        rep.min_coherence_slack =
            std::min(rep.min_coherence_slack, inner - (p.sigma / g.gamma) * breg);
      }
    }
  }

  rep.lipschitz_ok = rep.max_lipschitz_ratio <= p.lipschitz + opts.tol;
  rep.weak_ok = rep.has_solution && rep.min_weak_slack >= -opts.tol;
  rep.coherence_ok =
      p.sigma > 0.0 && rep.has_solution && rep.min_coherence_slack >= -opts.tol;
  rep.pass = rep.lipschitz_ok && (!rep.has_solution || rep.weak_ok) &&
             (p.sigma == 0.0 || rep.coherence_ok);
  return rep;
}

}  // namespace optde
