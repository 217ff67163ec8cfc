#pragma once

// Experiment runner: builds problem/geometry/set/solver from a flat
// configuration, executes seeded runs, writes CSV traces and a JSON
// report with bound-satisfaction flags and fitted rates.

#include <cstdint>
#include <map>
#include <string>

#include "optde/common.hpp"
#include "optde/geometry.hpp"
#include "optde/metrics.hpp"
#include "optde/problems.hpp"
#include "optde/solvers.hpp"

namespace optde {

struct ExperimentConfig {
  std::string problem = "bilinear";  // bilinear | sq-quadratic | xysq | pseudo2d
  long long dim = 2;
  double coupling = 1.0;             // bilinear
  double mu = 1.0, skew = 1.0;       // sq-quadratic
  std::uint64_t problem_seed = 7;

  std::string geometry = "euclidean";  // euclidean | lp
  double norm_p = 0.0;                 // > 0 selects lp(p)

  std::string set = "auto";  // auto | full | box | ball
  double set_halfwidth = 2.0;
  double set_radius = 10.0;

  std::string solver = "optde";  // optde|soptde|soptde-v2|eg|de|gda|optde-reg
  double alpha = 0.0;
  double sigma = -1.0;           // < 0 keeps the problem's sigma
  double epsilon = 0.05;         // optde-reg
  long long iters = 1000;
  Vec w0;                        // empty: per-problem default

  double noise_s = 0.0;
  long long batch = 1;
  std::uint64_t seed = 1;
  // Number of consecutive seeds (seed, seed+1, ...). 0 = auto: 1 for
  // deterministic solvers, 50 for stochastic ones.
  long long seeds = 0;
  std::vector<std::uint64_t> seed_list;  // explicit list; overrides seeds

  double merit_D = 0.0;      // <= 0: auto when a solution is known
  long long merit_every = 0; // 0: only new-best rows
  long long record_every = 1;
  std::string metric = "auto";  // compare metric: auto | dist | residual
  std::string out_dir;
};

// Flat `key = value` file, keys named like the CLI flags; '#' comments.
// Unknown keys raise invalid_input with a line diagnostic.
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value);
void apply_preset(ExperimentConfig& cfg, const std::string& name);

struct BuiltExperiment {
  OperatorProblem problem;
  NormGeometry geometry;
  FeasibleSet set;
  Vec w0;
  double merit_D = 0.0;
};
BuiltExperiment build_experiment(const ExperimentConfig& cfg);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double best_residual = 0.0;
  long long best_k = 0;
  std::optional<double> final_dist, best_dist, sampled_dist;
  std::optional<double> final_merit, best_merit;
  bool diverged = false;
  CallCounter calls;
  IterateTrace trace;
  std::string trace_file;
};

struct BoundCheckResult {
  std::string kind;
  std::map<std::string, double> params;
  double lhs = 0.0;  // measured value at the final checked K
  double rhs = 0.0;  // bound at the final checked K
  bool pass = false;
  long long checked = 0;
  long long violations = 0;
};

struct FitReportEntry {
  std::string field, model;
  FitResult fit;
};

struct Aggregate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  long long n = 0;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<SeedOutcome> seeds;
  std::vector<BoundCheckResult> bounds;
  std::vector<FitReportEntry> fits;
  std::optional<Aggregate> final_dist_agg;
  std::optional<Aggregate> sampled_sq_dist_agg;  // stochastic outputs
  CallCounter total_calls;
  double wall_clock_ms = 0.0;

  std::string to_json() const;
};

RunReport run_experiment(const ExperimentConfig& cfg);

struct CompareRow {
  std::string solver;
  // operator calls needed per target accuracy; nullopt = unreached
  std::vector<std::optional<long long>> calls_to_accuracy;
  bool diverged = false;
};
struct CompareReport {
  std::vector<double> accuracies{1e-2, 1e-3, 1e-4};
  std::string metric;
  std::vector<CompareRow> rows;
  std::string to_json() const;
  std::string to_table() const;
};
CompareReport compare(const std::vector<ExperimentConfig>& cfgs);

struct SweepRow {
  double value = 0.0;
  double best_residual = 0.0;
  std::optional<double> final_dist_mean, best_merit;
  std::optional<long long> iters_to_target;  // merit <= D*epsilon (optde-reg)
  long long calls = 0;
};
struct SweepReport {
  std::string parameter;
  std::vector<SweepRow> rows;
  std::vector<RunReport> reports;
  std::string to_csv() const;
};
SweepReport sweep(const ExperimentConfig& base, const std::string& parameter,
                  const std::vector<double>& values);

// Trace I/O: CSV schema `k,a_k,A_k,residual_sum,dist,merit,calls`, floats
// at round-trip precision, missing metrics as empty fields.
void write_trace_csv(const IterateTrace& trace, const std::string& path);
std::string trace_to_csv(const IterateTrace& trace);
IterateTrace read_trace_csv(const std::string& path);

// Best-so-far reconstruction along a trace (running min of residual_sum;
// dist/merit are those of the minimizing record).
struct BestSoFar {
  std::vector<double> residual;
  std::vector<std::optional<double>> dist;
  std::vector<std::optional<double>> merit;
};
BestSoFar best_so_far(const IterateTrace& trace);

}  // namespace optde
