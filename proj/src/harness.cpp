#include "optde/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "optde/kernels.hpp"

namespace optde {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::exception();
    return v;
  } catch (...) {
    throw invalid_input(where + ": cannot parse number '" + s + "'");
  }
}

long long parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::exception();
    return v;
  } catch (...) {
    throw invalid_input(where + ": cannot parse integer '" + s + "'");
  }
}

Vec parse_vec(const std::string& s, const std::string& where) {
  Vec out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(parse_double(tok, where));
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
  const std::string where = "config key '" + key + "'";
  if (key == "problem") cfg.problem = value;
  else if (key == "dim") cfg.dim = parse_int(value, where);
  else if (key == "coupling") cfg.coupling = parse_double(value, where);
  else if (key == "mu") cfg.mu = parse_double(value, where);
  else if (key == "skew") cfg.skew = parse_double(value, where);
  else if (key == "problem-seed") cfg.problem_seed = (std::uint64_t)parse_int(value, where);
  else if (key == "geometry") cfg.geometry = value;
  else if (key == "norm-p") cfg.norm_p = parse_double(value, where);
  else if (key == "set") cfg.set = value;
  else if (key == "set-halfwidth") cfg.set_halfwidth = parse_double(value, where);
  else if (key == "set-radius") cfg.set_radius = parse_double(value, where);
  else if (key == "solver") cfg.solver = value;
  else if (key == "alpha") cfg.alpha = parse_double(value, where);
  else if (key == "sigma") cfg.sigma = parse_double(value, where);
  else if (key == "epsilon") cfg.epsilon = parse_double(value, where);
  else if (key == "iters") cfg.iters = parse_int(value, where);
  else if (key == "w0") cfg.w0 = parse_vec(value, where);
  else if (key == "noise-s") cfg.noise_s = parse_double(value, where);
  else if (key == "batch") cfg.batch = parse_int(value, where);
  else if (key == "seed") cfg.seed = (std::uint64_t)parse_int(value, where);
  else if (key == "seeds") {
    // Either a count or an explicit comma-separated list of seeds.
    if (value.find(',') != std::string::npos) {
      cfg.seed_list.clear();
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) cfg.seed_list.push_back((std::uint64_t)parse_int(tok, where));
    } else {
      cfg.seeds = parse_int(value, where);
    }
  }
  else if (key == "merit-D") cfg.merit_D = parse_double(value, where);
  else if (key == "merit-every") cfg.merit_every = parse_int(value, where);
  else if (key == "record-every") cfg.record_every = parse_int(value, where);
  else if (key == "metric") cfg.metric = value;
  else if (key == "out") cfg.out_dir = value;
  else if (key == "preset") apply_preset(cfg, value);
  else throw invalid_input("unknown config key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw invalid_input(path + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_line(cfg, key, value);
    } catch (const invalid_input& e) {
      throw invalid_input(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
  if (name == "thm1-linear") {
    cfg.problem = "sq-quadratic";
    cfg.dim = 10;
    cfg.mu = 0.5;
    cfg.skew = 1.0;
    cfg.solver = "optde";
    cfg.iters = 300;
    cfg.seeds = 1;
  } else if (name == "gda-diverges") {
    cfg.problem = "bilinear";
    cfg.dim = 2;
    cfg.coupling = 1.0;
    cfg.solver = "gda";
    cfg.alpha = 0.5;
    cfg.iters = 200;
  } else {
    throw invalid_input("unknown preset '" + name + "'");
  }
}

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
  BuiltExperiment b;
  if (cfg.problem == "bilinear") {
    b.problem = make_bilinear((std::size_t)cfg.dim, cfg.coupling);
  } else if (cfg.problem == "sq-quadratic") {
    b.problem = make_strongly_monotone_quadratic((std::size_t)cfg.dim, cfg.mu,
                                                 cfg.skew, cfg.problem_seed);
  } else if (cfg.problem == "xysq") {
    b.problem = make_xy_squared(cfg.set_halfwidth);
  } else if (cfg.problem == "pseudo2d") {
    b.problem = make_pseudomonotone_2d();
  } else {
    throw invalid_input("unknown problem id '" + cfg.problem + "'");
  }

  if (cfg.geometry == "euclidean" && cfg.norm_p <= 0.0)
    b.geometry = NormGeometry::euclidean();
  else if (cfg.geometry == "lp" || cfg.norm_p > 0.0)
    b.geometry = NormGeometry::lp(cfg.norm_p > 0.0 ? cfg.norm_p : 1.5);
  else
    throw invalid_input("unknown geometry '" + cfg.geometry + "'");

  const std::size_t d = b.problem.dim;
  std::string set = cfg.set;
  if (set == "auto") set = cfg.problem == "xysq" ? "box" : "full";
  if (set == "full") {
    b.set = FeasibleSet::full_space(d);
  } else if (set == "box") {
    b.set = FeasibleSet::box(Vec(d, -cfg.set_halfwidth), Vec(d, cfg.set_halfwidth));
  } else if (set == "ball") {
    b.set = FeasibleSet::ball(Vec(d, 0.0), cfg.set_radius);
  } else {
    throw invalid_input("unknown set kind '" + set + "'");
  }

  b.w0 = cfg.w0.empty() ? Vec(d, 1.0) : cfg.w0;
  if (b.w0.size() != d) throw invalid_input("w0 dimension mismatch");
  if (cfg.w0.empty()) {
    b.w0 = project(b.set, as_span(b.w0));
  } else if (!b.set.contains(as_span(b.w0))) {
    throw invalid_input("w0 is not feasible for the configured set");
  }

  if (cfg.merit_D > 0.0) {
    b.merit_D = cfg.merit_D;
  } else if (b.problem.known_solution) {
    Vec diff(d);
    kernels::sub(as_span(diff), as_span(b.w0), as_span(*b.problem.known_solution));
    b.merit_D = 2.0 * (norm(b.geometry, as_span(diff)) + 1.0);
  }
  return b;
}

namespace {

struct SolverOutput {
  RunResult result;
  CallCounter calls;
};

SolverOutput run_one(const ExperimentConfig& cfg, const BuiltExperiment& b,
                     std::uint64_t seed) {
  SolverConfig scfg;
  scfg.alpha = cfg.alpha;
  scfg.iters = cfg.iters;
  scfg.w0 = b.w0;
  if (cfg.sigma >= 0.0) scfg.sigma_override = cfg.sigma;
  scfg.record_every = cfg.record_every;
  scfg.merit_every = cfg.merit_every;
  scfg.merit_D = b.merit_D;

  // Merit evaluation is opt-in (it needs an inner solve): enabled by an
  // explicit merit-D or merit-every, and always for optde-reg. Cadence
  // defaults to max(1, K/200); new-best and final rows are always covered.
  const bool merit_on = b.merit_D > 0.0 && (cfg.merit_D > 0.0 ||
                                            cfg.merit_every > 0 ||
                                            cfg.solver == "optde-reg");
  if (merit_on) {
    scfg.merit_every = cfg.merit_every > 0
                           ? cfg.merit_every
                           : std::max<long long>(1, cfg.iters / 200);
    MeritSpec mspec;
    mspec.D = b.merit_D;
    mspec.constraint_norm = b.geometry;
    if (cfg.solver == "optde-reg") mspec.extra_ball_center = b.w0;
    scfg.merit_fn = [&b, mspec](std::span<const double> w) {
      return restricted_merit(b.problem, b.geometry, b.set, w, mspec);
    };
  }

  SolverOutput out;
  if (cfg.solver == "optde") {
    out.result = optde_run(b.problem, b.geometry, b.set, scfg, out.calls);
  } else if (cfg.solver == "soptde" || cfg.solver == "soptde-v2") {
    StochasticOracle oracle(b.problem, cfg.noise_s, cfg.batch, seed);
    out.result = soptde_run(oracle, b.geometry, b.set, scfg,
                            cfg.solver == "soptde" ? SoptdeVariant::conservative
                                                   : SoptdeVariant::aggressive,
                            out.calls);
  } else if (cfg.solver == "eg") {
    out.result = extragradient_run(b.problem, b.geometry, b.set, scfg, out.calls);
  } else if (cfg.solver == "de") {
    out.result = dual_extrapolation_run(b.problem, b.geometry, b.set, scfg, out.calls);
  } else if (cfg.solver == "gda") {
    out.result = gda_run(b.problem, b.geometry, b.set, scfg, out.calls);
  } else if (cfg.solver == "optde-reg") {
    out.result = monotone_solve_via_regularization(b.problem, b.geometry, b.set,
                                                   cfg.epsilon, scfg, out.calls);
  } else {
    throw invalid_input("unknown solver id '" + cfg.solver + "'");
  }
  return out;
}

double geometry_dist(const NormGeometry& g, std::span<const double> a,
                     std::span<const double> bb) {
  Vec diff(a.size());
  kernels::sub(as_span(diff), a, bb);
  return norm(g, as_span(diff));
}

// Regularized bilinear solution: (eps I + J) w = eps w0 with J w = (c y, -c x)
// and J^2 = -c^2 I, so w* = eps (eps I - J) w0 / (eps^2 + c^2).
Vec bilinear_regularized_solution(std::size_t d, double c, double eps,
                                  const Vec& w0) {
  const std::size_t h = d / 2;
  Vec out(d);
  for (std::size_t i = 0; i < h; ++i) {
    out[i] = eps * (eps * w0[i] - c * w0[h + i]) / (eps * eps + c * c);
    out[h + i] = eps * (eps * w0[h + i] + c * w0[i]) / (eps * eps + c * c);
  }
  return out;
}

double resolved_sigma(const ExperimentConfig& cfg, const BuiltExperiment& b) {
  return cfg.sigma >= 0.0 ? cfg.sigma : b.problem.sigma;
}

bool is_stochastic_solver(const std::string& id) {
  return id == "soptde" || id == "soptde-v2";
}

std::vector<std::uint64_t> resolve_seeds(const ExperimentConfig& cfg) {
  if (!cfg.seed_list.empty()) return cfg.seed_list;
  long long n = cfg.seeds;
  if (n <= 0) n = is_stochastic_solver(cfg.solver) ? 50 : 1;
  std::vector<std::uint64_t> out;
  for (long long i = 0; i < n; ++i) out.push_back(cfg.seed + (std::uint64_t)i);
  return out;
}

std::optional<Aggregate> aggregate(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  Aggregate a;
  a.n = (long long)xs.size();
  for (double v : xs) a.mean += v;
  a.mean /= double(a.n);
  if (a.n > 1) {
    double var = 0;
    for (double v : xs) var += (v - a.mean) * (v - a.mean);
    var /= double(a.n - 1);
    a.se = std::sqrt(var / double(a.n));
  }
  return a;
}

double resolved_alpha(const ExperimentConfig& cfg, const BuiltExperiment& b) {
  if (cfg.alpha > 0.0) return cfg.alpha;
  if (cfg.solver == "soptde")
    return default_alpha(ScheduleVariant::sto_conservative, b.geometry.gamma);
  if (cfg.solver == "soptde-v2")
    return default_alpha(ScheduleVariant::sto_aggressive, b.geometry.gamma);
  if (cfg.solver == "eg" || cfg.solver == "de" || cfg.solver == "gda") return 0.5;
  return default_alpha(ScheduleVariant::det, b.geometry.gamma);
}

}  // namespace

BestSoFar best_so_far(const IterateTrace& trace) {
  BestSoFar out;
  double best = std::numeric_limits<double>::infinity();
  std::optional<double> bd, bm;
  for (const auto& r : trace.records) {
    if (r.residual_sum < best) {
      best = r.residual_sum;
      bd = r.dist;
      bm = r.merit;
    }
    out.residual.push_back(best);
    out.dist.push_back(bd);
    out.merit.push_back(bm);
  }
  return out;
}

std::string trace_to_csv(const IterateTrace& trace) {
  std::string out = "k,a_k,A_k,residual_sum,dist,merit,calls\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.k);
    out += ',';
    out += fmt_double(r.a_k);
    out += ',';
    out += fmt_double(r.A_k);
    out += ',';
    out += fmt_double(r.residual_sum);
    out += ',';
    if (r.dist) out += fmt_double(*r.dist);
    out += ',';
    if (r.merit) out += fmt_double(*r.merit);
    out += ',';
    out += std::to_string(r.calls);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const IterateTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("cannot open trace file for writing: " + path);
  out << trace_to_csv(trace);
}

IterateTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "k,a_k,A_k,residual_sum,dist,merit,calls")
    throw invalid_input("trace file header mismatch: " + path);
  IterateTrace t;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    TraceRecord r;
    std::getline(ss, tok, ',');
    r.k = parse_int(tok, path);
    std::getline(ss, tok, ',');
    r.a_k = parse_double(tok, path);
    std::getline(ss, tok, ',');
    r.A_k = parse_double(tok, path);
    std::getline(ss, tok, ',');
    r.residual_sum = parse_double(tok, path);
    std::getline(ss, tok, ',');
    if (!tok.empty()) r.dist = parse_double(tok, path);
    std::getline(ss, tok, ',');
    if (!tok.empty()) r.merit = parse_double(tok, path);
    std::getline(ss, tok, ',');
    r.calls = parse_int(tok, path);
    t.records.push_back(r);
  }
  return t;
}

namespace {

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["dim"] = c.dim;
  j["coupling"] = c.coupling;
  j["mu"] = c.mu;
  j["skew"] = c.skew;
  j["problem-seed"] = c.problem_seed;
  j["geometry"] = c.geometry;
  j["norm-p"] = c.norm_p;
  j["set"] = c.set;
  j["set-halfwidth"] = c.set_halfwidth;
  j["set-radius"] = c.set_radius;
  j["solver"] = c.solver;
  j["alpha"] = c.alpha;
  j["sigma"] = c.sigma;
  j["epsilon"] = c.epsilon;
  j["iters"] = c.iters;
  j["w0"] = c.w0;
  j["noise-s"] = c.noise_s;
  j["batch"] = c.batch;
  j["seed"] = c.seed;
  if (c.seed_list.empty())
    j["seeds"] = c.seeds;
  else
    j["seeds"] = c.seed_list;
  j["merit-D"] = c.merit_D;
  j["merit-every"] = c.merit_every;
  j["record-every"] = c.record_every;
  j["metric"] = c.metric;
  j["out"] = c.out_dir;
  return j;
}

void check_bounds(const ExperimentConfig& cfg, const BuiltExperiment& b,
                  RunReport& report) {
  const double sigma = resolved_sigma(cfg, b);
  const double alpha = resolved_alpha(cfg, b);
  const double gamma = b.geometry.gamma, delta = b.geometry.delta;
  const double L = b.problem.lipschitz;
  const bool has_sol = b.problem.known_solution.has_value();

  auto dist0_of = [&](const Vec& target) {
    return geometry_dist(b.geometry, as_span(b.w0), as_span(target));
  };

  if (cfg.solver == "optde" && has_sol) {
    const double dist0 = dist0_of(*b.problem.known_solution);
    BoundSpec spec;
    spec.alpha = alpha;
    spec.gamma = gamma;
    spec.delta = delta;
    spec.L = L;
    spec.sigma = sigma;
    spec.dist0 = dist0;
    spec.D = b.merit_D;

    for (const auto& seed : report.seeds) {
      const auto bsf = best_so_far(seed.trace);
      if (sigma > 0.0) {
        // thm1_dist flags at every recorded K for the best-so-far iterate.
        BoundCheckResult r14;
        r14.kind = "thm1_dist";
        r14.params = {{"alpha", alpha}, {"gamma", gamma}, {"delta", delta},
                      {"L", L},         {"sigma", sigma}, {"dist0", dist0}};
        BoundCheckResult rp1 = r14;
        rp1.kind = "prop1_dist";
        for (std::size_t i = 0; i < seed.trace.records.size(); ++i) {
          const auto& rec = seed.trace.records[i];
          spec.K = rec.k;
          spec.kind = BoundKind::thm1_dist;
          const double rhs = theoretical_bound(spec);
          if (bsf.dist[i]) {
            ++r14.checked;
            r14.lhs = *bsf.dist[i];
            r14.rhs = rhs;
            if (*bsf.dist[i] > rhs) ++r14.violations;
          }
          if (rec.k >= 2 && rec.dist) {
            spec.kind = BoundKind::prop1_dist;
            const double rhs_p = theoretical_bound(spec);
            ++rp1.checked;
            rp1.lhs = *rec.dist;
            rp1.rhs = rhs_p;
            if (*rec.dist > rhs_p) ++rp1.violations;
          }
        }
        r14.pass = r14.checked > 0 && r14.violations == 0;
        rp1.pass = rp1.checked > 0 && rp1.violations == 0;
        report.bounds.push_back(r14);
        report.bounds.push_back(rp1);
      } else {
        // thm1_merit flags at records where the best-so-far merit is known.
        BoundCheckResult r12;
        r12.kind = "thm1_merit";
        r12.params = {{"alpha", alpha}, {"gamma", gamma}, {"delta", delta},
                      {"L", L},         {"sigma", sigma}, {"dist0", dist0},
                      {"D", b.merit_D}};
        spec.kind = BoundKind::thm1_merit;
        const auto bsf2 = best_so_far(seed.trace);
        for (std::size_t i = 0; i < seed.trace.records.size(); ++i) {
          if (!bsf2.merit[i]) continue;
          spec.K = seed.trace.records[i].k;
          const double rhs = theoretical_bound(spec);
          ++r12.checked;
          r12.lhs = *bsf2.merit[i];
          r12.rhs = rhs;
          if (*bsf2.merit[i] > rhs) ++r12.violations;
        }
        r12.pass = r12.checked > 0 && r12.violations == 0;
        if (r12.checked > 0) report.bounds.push_back(r12);
      }
    }
  }

  if (cfg.solver == "optde-reg" && cfg.problem == "bilinear") {
    const Vec wreg = bilinear_regularized_solution(b.problem.dim, cfg.coupling,
                                                   cfg.epsilon, b.w0);
    const double dist0 = dist0_of(wreg);
    BoundSpec spec;
    spec.kind = BoundKind::cor1;
    spec.alpha = alpha;
    spec.gamma = gamma;
    spec.delta = delta;
    spec.L = L + cfg.epsilon * delta / gamma;
    spec.sigma = cfg.epsilon;
    spec.dist0 = dist0;
    spec.D = b.merit_D;
    for (const auto& seed : report.seeds) {
      BoundCheckResult rc;
      rc.kind = "cor1";
      rc.params = {{"alpha", alpha},       {"gamma", gamma},
                   {"delta", delta},       {"L", spec.L},
                   {"epsilon", cfg.epsilon}, {"dist0", dist0},
                   {"D", b.merit_D}};
      const auto bsf = best_so_far(seed.trace);
      for (std::size_t i = 0; i < seed.trace.records.size(); ++i) {
        if (!bsf.merit[i]) continue;
        spec.K = seed.trace.records[i].k;
        ++rc.checked;
        rc.lhs = *bsf.merit[i];
        rc.rhs = theoretical_bound(spec);
        if (rc.lhs > rc.rhs) ++rc.violations;
      }
      rc.pass = rc.checked > 0 && rc.violations == 0;
      if (rc.checked > 0) report.bounds.push_back(rc);
    }
  }

  if (cfg.solver == "soptde" && has_sol && sigma > 0.0) {
    // Mean squared distance of the sampled output across seeds vs the
    // stochastic bound; pass rule mean + 2 SE <= bound.
    if (report.sampled_sq_dist_agg && report.sampled_sq_dist_agg->n >= 2) {
      const double mean = report.sampled_sq_dist_agg->mean;
      const double se = report.sampled_sq_dist_agg->se;
      BoundSpec spec;
      spec.kind = BoundKind::thm2_dist;
      spec.alpha = alpha;
      spec.gamma = gamma;
      spec.delta = delta;
      spec.L = L;
      spec.sigma = sigma;
      spec.s = cfg.noise_s / std::sqrt(double(cfg.batch));
      spec.dist0 = dist0_of(*b.problem.known_solution);
      spec.K = cfg.iters;
      BoundCheckResult rc;
      rc.kind = "thm2_dist";
      rc.params = {{"alpha", alpha},   {"gamma", gamma},   {"delta", delta},
                   {"L", L},           {"sigma", sigma},
                   {"s", spec.s},      {"dist0", spec.dist0},
                   {"K", double(cfg.iters)},
                   {"seeds", double(report.sampled_sq_dist_agg->n)},
                   {"se", se}};
      rc.checked = 1;
      rc.lhs = mean + 2.0 * se;
      rc.rhs = theoretical_bound(spec);
      rc.violations = rc.lhs > rc.rhs ? 1 : 0;
      rc.pass = rc.violations == 0;
      report.bounds.push_back(rc);
    }
  }
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  BuiltExperiment b = build_experiment(cfg);
  RunReport report;
  report.config = cfg;

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  for (const std::uint64_t seed : resolve_seeds(cfg)) {
    SeedOutcome oc;
    oc.seed = seed;
    try {
      SolverOutput so = run_one(cfg, b, seed);
      oc.calls = so.calls;
      oc.diverged = so.result.diverged;
      oc.best_residual = so.result.best_residual;
      oc.best_k = so.result.best_k;
      oc.trace = std::move(so.result.trace);
      if (b.problem.known_solution) {
        const Vec& ws = *b.problem.known_solution;
        if (!so.result.last.empty())
          oc.final_dist = geometry_dist(b.geometry, as_span(so.result.last), as_span(ws));
        if (!so.result.best.empty())
          oc.best_dist = geometry_dist(b.geometry, as_span(so.result.best), as_span(ws));
        if (cfg.solver == "soptde" || cfg.solver == "soptde-v2")
          oc.sampled_dist = oc.best_dist;
      }
      if (!oc.trace.records.empty()) {
        const auto bsf = best_so_far(oc.trace);
        oc.best_merit = bsf.merit.back();
        oc.final_merit = oc.trace.records.back().merit;
      }
    } catch (const divergence_error& e) {
      oc.diverged = true;
      oc.trace = e.trace;
    }
    if (!cfg.out_dir.empty()) {
      oc.trace_file = cfg.out_dir + "/trace_seed" + std::to_string(seed) + ".csv";
      write_trace_csv(oc.trace, oc.trace_file);
    }
    report.total_calls.deterministic_calls += oc.calls.deterministic_calls;
    report.total_calls.stochastic_samples += oc.calls.stochastic_samples;
    report.total_calls.oracle_calls += oc.calls.oracle_calls;
    report.seeds.push_back(std::move(oc));
  }

  {
    std::vector<double> fd, sq;
    for (const auto& s : report.seeds) {
      if (s.final_dist) fd.push_back(*s.final_dist);
      if (s.sampled_dist) sq.push_back(*s.sampled_dist * *s.sampled_dist);
    }
    report.final_dist_agg = aggregate(fd);
    report.sampled_sq_dist_agg = aggregate(sq);
  }

  check_bounds(cfg, b, report);

  // Fits on the first seed's trace.
  if (!report.seeds.empty() && report.seeds.front().trace.records.size() >= 10) {
    const auto& tr = report.seeds.front().trace;
    try {
      report.fits.push_back(
          {"residual_sum", "power", fit_rate(tr, TraceField::residual_sum, FitModel::power)});
    } catch (const invalid_input&) {
    }
    if (resolved_sigma(cfg, b) > 0.0) {
      try {
        report.fits.push_back(
            {"dist", "geometric", fit_rate(tr, TraceField::distance, FitModel::geometric)});
      } catch (const invalid_input&) {
      }
    }
  }

  report.wall_clock_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
  if (!cfg.out_dir.empty()) {
    std::ofstream out(cfg.out_dir + "/report.json", std::ios::binary);
    out << report.to_json();
  }
  return report;
}

std::string RunReport::to_json() const {
  json j;
  j["config_echo"] = config_to_json(config);
  j["seeds"] = json::array();
  for (const auto& s : seeds) {
    json js;
    js["seed"] = s.seed;
    js["best_residual"] = s.best_residual;
    js["best_k"] = s.best_k;
    if (s.final_dist) js["final_dist"] = *s.final_dist;
    if (s.best_dist) js["best_dist"] = *s.best_dist;
    if (s.sampled_dist) js["sampled_dist"] = *s.sampled_dist;
    if (s.final_merit) js["final_merit"] = *s.final_merit;
    if (s.best_merit) js["best_merit"] = *s.best_merit;
    js["diverged"] = s.diverged;
    js["calls"] = {{"deterministic", s.calls.deterministic_calls},
                   {"stochastic_samples", s.calls.stochastic_samples},
                   {"oracle_calls", s.calls.oracle_calls}};
    if (!s.trace_file.empty()) js["trace_file"] = s.trace_file;
    j["seeds"].push_back(js);
  }
  j["bounds"] = json::array();
  for (const auto& bnd : bounds) {
    json jb;
    jb["kind"] = bnd.kind;
    jb["params"] = bnd.params;
    jb["lhs"] = bnd.lhs;
    jb["rhs"] = bnd.rhs;
    jb["pass"] = bnd.pass;
    jb["checked"] = bnd.checked;
    jb["violations"] = bnd.violations;
    j["bounds"].push_back(jb);
  }
  j["fits"] = json::array();
  for (const auto& f : fits) {
    j["fits"].push_back({{"field", f.field},
                         {"model", f.model},
                         {"coefficient", f.fit.coefficient},
                         {"rate", f.fit.rate},
                         {"r2", f.fit.r2}});
  }
  if (final_dist_agg)
    j["aggregates"]["final_dist"] = {{"mean", final_dist_agg->mean},
                                     {"se", final_dist_agg->se},
                                     {"n", final_dist_agg->n}};
  if (sampled_sq_dist_agg)
    j["aggregates"]["sampled_sq_dist"] = {{"mean", sampled_sq_dist_agg->mean},
                                          {"se", sampled_sq_dist_agg->se},
                                          {"n", sampled_sq_dist_agg->n}};
  j["calls"] = {{"deterministic", total_calls.deterministic_calls},
                {"stochastic_samples", total_calls.stochastic_samples},
                {"oracle_calls", total_calls.oracle_calls}};
  j["wall_clock_ms"] = wall_clock_ms;
  return j.dump(2);
}

CompareReport compare(const std::vector<ExperimentConfig>& cfgs) {
  if (cfgs.size() < 2) throw invalid_input("compare: need at least two configs");
  for (std::size_t i = 1; i < cfgs.size(); ++i) {
    const auto& a = cfgs[0];
    const auto& c = cfgs[i];
    if (c.problem != a.problem || c.dim != a.dim || c.coupling != a.coupling ||
        c.mu != a.mu || c.skew != a.skew || c.problem_seed != a.problem_seed)
      throw invalid_input("compare: configs must share a problem");
  }

  CompareReport rep;
  ExperimentConfig probe = cfgs[0];
  BuiltExperiment b0 = build_experiment(probe);
  rep.metric = cfgs[0].metric;
  if (rep.metric == "auto")
    rep.metric = b0.problem.known_solution ? "dist" : "residual";

  for (const auto& cfg : cfgs) {
    ExperimentConfig one = cfg;
    one.seeds = 1;
    one.out_dir.clear();
    RunReport rr = run_experiment(one);
    CompareRow row;
    row.solver = cfg.solver;
    row.diverged = rr.seeds.front().diverged;
    const auto& tr = rr.seeds.front().trace;
    for (double acc : rep.accuracies) {
      std::optional<long long> reached;
      double running = std::numeric_limits<double>::infinity();
      for (const auto& rec : tr.records) {
        double v;
        if (rep.metric == "dist") {
          if (!rec.dist) continue;
          v = *rec.dist;
        } else {
          v = rec.residual_sum;
        }
        running = std::min(running, v);
        if (running <= acc) {
          reached = rec.calls;
          break;
        }
      }
      row.calls_to_accuracy.push_back(reached);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string CompareReport::to_json() const {
  json j;
  j["metric"] = metric;
  j["accuracies"] = accuracies;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    json jr;
    jr["solver"] = r.solver;
    jr["diverged"] = r.diverged;
    jr["calls"] = json::array();
    for (const auto& c : r.calls_to_accuracy)
      jr["calls"].push_back(c ? json(*c) : json("unreached"));
    j["rows"].push_back(jr);
  }
  return j.dump(2);
}

std::string CompareReport::to_table() const {
  std::string out = "solver";
  for (double a : accuracies) out += "\tcalls@" + fmt_double(a);
  out += "\n";
  for (const auto& r : rows) {
    out += r.solver;
    for (const auto& c : r.calls_to_accuracy)
      out += "\t" + (c ? std::to_string(*c) : std::string("unreached"));
    if (r.diverged) out += "\t(diverged)";
    out += "\n";
  }
  return out;
}

SweepReport sweep(const ExperimentConfig& base, const std::string& parameter,
                  const std::vector<double>& values) {
  SweepReport rep;
  rep.parameter = parameter;
  for (double v : values) {
    ExperimentConfig cfg = base;
    if (parameter == "alpha") cfg.alpha = v;
    else if (parameter == "sigma") cfg.sigma = v;
    else if (parameter == "epsilon") cfg.epsilon = v;
    else if (parameter == "iters") cfg.iters = (long long)v;
    else if (parameter == "noise-s") cfg.noise_s = v;
    else if (parameter == "batch") cfg.batch = (long long)v;
    else if (parameter == "merit-D") cfg.merit_D = v;
    else if (parameter == "coupling") cfg.coupling = v;
    else if (parameter == "mu") cfg.mu = v;
    else if (parameter == "skew") cfg.skew = v;
    else throw invalid_input("sweep: unknown parameter '" + parameter + "'");
    if (!base.out_dir.empty())
      cfg.out_dir = base.out_dir + "/" + parameter + "=" + fmt_double(v);

    RunReport rr = run_experiment(cfg);
    SweepRow row;
    row.value = v;
    if (!rr.seeds.empty()) {
      const auto& s0 = rr.seeds.front();
      row.best_residual = s0.best_residual;
      row.best_merit = s0.best_merit;
      row.calls = s0.calls.deterministic_calls + s0.calls.oracle_calls;
      double mean = 0;
      long long n = 0;
      for (const auto& s : rr.seeds)
        if (s.final_dist) {
          mean += *s.final_dist;
          ++n;
        }
      if (n > 0) row.final_dist_mean = mean / double(n);

      // Iterations until the best-so-far merit reaches D*epsilon.
      if (cfg.solver == "optde-reg") {
        BuiltExperiment bb = build_experiment(cfg);
        const double target = bb.merit_D * cfg.epsilon;
        const auto bsf = best_so_far(s0.trace);
        for (std::size_t i = 0; i < s0.trace.records.size(); ++i) {
          if (bsf.merit[i] && *bsf.merit[i] <= target) {
            row.iters_to_target = s0.trace.records[i].k;
            break;
          }
        }
      }
    }
    rep.rows.push_back(row);
    rep.reports.push_back(std::move(rr));
  }
  if (!base.out_dir.empty() && !values.empty()) {
    std::filesystem::create_directories(base.out_dir);
    std::ofstream out(base.out_dir + "/sweep_summary.csv", std::ios::binary);
    out << rep.to_csv();
  }
  return rep;
}

std::string SweepReport::to_csv() const {
  std::string out = "parameter,value,best_residual,final_dist_mean,best_merit,iters_to_target,calls\n";
  for (const auto& r : rows) {
    out += parameter;
    out += ',';
    out += fmt_double(r.value);
    out += ',';
    out += fmt_double(r.best_residual);
    out += ',';
    if (r.final_dist_mean) out += fmt_double(*r.final_dist_mean);
    out += ',';
    if (r.best_merit) out += fmt_double(*r.best_merit);
    out += ',';
    if (r.iters_to_target) out += std::to_string(*r.iters_to_target);
    out += ',';
    out += std::to_string(r.calls);
    out += '\n';
  }
  return out;
}

}  // namespace optde
