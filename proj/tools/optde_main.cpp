#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optde/harness.hpp"

namespace {

using optde::ExperimentConfig;

struct FlagOverrides {
  std::optional<std::string> config_path, preset, problem, solver, set, metric, out;
  std::optional<std::string> w0;
  std::optional<double> alpha, sigma, epsilon, norm_p, noise_s, merit_D, coupling,
      mu, skew, set_halfwidth, set_radius;
  std::optional<long long> iters, batch, seed, seeds, merit_every, record_every, dim;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--config", f.config_path, "flat key=value config file");
  cmd->add_option("--preset", f.preset, "named preset (thm1-linear, gda-diverges)");
  cmd->add_option("--problem", f.problem, "bilinear|sq-quadratic|xysq|pseudo2d");
  cmd->add_option("--solver", f.solver, "optde|soptde|soptde-v2|eg|de|gda|optde-reg");
  cmd->add_option("--alpha", f.alpha);
  cmd->add_option("--sigma", f.sigma, "override the problem's sigma (>= 0)");
  cmd->add_option("--epsilon", f.epsilon, "regularization strength for optde-reg");
  cmd->add_option("--iters", f.iters);
  cmd->add_option("--norm-p", f.norm_p, "lp geometry exponent (1 < p <= 2)");
  cmd->add_option("--seed", f.seed);
  cmd->add_option("--seeds", f.seeds, "number of consecutive seeds");
  cmd->add_option("--noise-s", f.noise_s, "oracle noise scale s");
  cmd->add_option("--batch", f.batch, "oracle batch size m");
  cmd->add_option("--merit-D", f.merit_D);
  cmd->add_option("--merit-every", f.merit_every);
  cmd->add_option("--record-every", f.record_every);
  cmd->add_option("--out", f.out, "output directory for traces and report");
  cmd->add_option("--dim", f.dim);
  cmd->add_option("--coupling", f.coupling);
  cmd->add_option("--mu", f.mu);
  cmd->add_option("--skew", f.skew);
  cmd->add_option("--set", f.set, "full|box|ball");
  cmd->add_option("--set-halfwidth", f.set_halfwidth);
  cmd->add_option("--set-radius", f.set_radius);
  cmd->add_option("--w0", f.w0, "comma-separated start point");
  cmd->add_option("--metric", f.metric, "compare metric: auto|dist|residual");
}

ExperimentConfig resolve_config(const FlagOverrides& f) {
  ExperimentConfig cfg;
  if (f.config_path) cfg = optde::parse_config_file(*f.config_path);
  if (f.preset) optde::apply_preset(cfg, *f.preset);
  if (f.problem) cfg.problem = *f.problem;
  if (f.solver) cfg.solver = *f.solver;
  if (f.set) cfg.set = *f.set;
  if (f.metric) cfg.metric = *f.metric;
  if (f.out) cfg.out_dir = *f.out;
  if (f.w0) optde::apply_config_line(cfg, "w0", *f.w0);
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.sigma) cfg.sigma = *f.sigma;
  if (f.epsilon) cfg.epsilon = *f.epsilon;
  if (f.norm_p) cfg.norm_p = *f.norm_p;
  if (f.noise_s) cfg.noise_s = *f.noise_s;
  if (f.merit_D) cfg.merit_D = *f.merit_D;
  if (f.coupling) cfg.coupling = *f.coupling;
  if (f.mu) cfg.mu = *f.mu;
  if (f.skew) cfg.skew = *f.skew;
  if (f.set_halfwidth) cfg.set_halfwidth = *f.set_halfwidth;
  if (f.set_radius) cfg.set_radius = *f.set_radius;
  if (f.iters) cfg.iters = *f.iters;
  if (f.batch) cfg.batch = *f.batch;
  if (f.seed) cfg.seed = (std::uint64_t)*f.seed;
  if (f.seeds) cfg.seeds = *f.seeds;
  if (f.merit_every) cfg.merit_every = *f.merit_every;
  if (f.record_every) cfg.record_every = *f.record_every;
  if (f.dim) cfg.dim = *f.dim;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optde: single-call optimistic dual extrapolation experiments"};
  app.require_subcommand(1);

  FlagOverrides run_flags;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common_flags(run_cmd, run_flags);

  std::vector<std::string> cmp_configs;
  FlagOverrides cmp_flags;
  auto* cmp_cmd = app.add_subcommand("compare", "calls-to-accuracy across solvers");
  cmp_cmd->add_option("--config", cmp_configs, "config files (repeatable, >= 2)")
      ->required();
  cmp_cmd->add_option("--metric", cmp_flags.metric);
  cmp_cmd->add_option("--out", cmp_flags.out);

  FlagOverrides sweep_flags;
  std::string sweep_param;
  std::string sweep_values;
  auto* sweep_cmd = app.add_subcommand("sweep", "vary one numeric parameter");
  add_common_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--param", sweep_param, "parameter name")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();

  FlagOverrides verify_flags;
  auto* verify_cmd = app.add_subcommand("verify", "sampled assumption checks");
  add_common_flags(verify_cmd, verify_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ExperimentConfig cfg = resolve_config(run_flags);
      optde::RunReport rep = optde::run_experiment(cfg);
      std::printf("%s\n", rep.to_json().c_str());
      return 0;
    }
    if (*cmp_cmd) {
      std::vector<ExperimentConfig> cfgs;
      for (const auto& path : cmp_configs)
        cfgs.push_back(optde::parse_config_file(path));
      for (auto& c : cfgs)
        if (cmp_flags.metric) c.metric = *cmp_flags.metric;
      optde::CompareReport rep = optde::compare(cfgs);
      std::printf("%s", rep.to_table().c_str());
      if (cmp_flags.out) {
        std::filesystem::create_directories(*cmp_flags.out);
        std::ofstream out(*cmp_flags.out + "/compare.json");
        out << rep.to_json();
      }
      return 0;
    }
    if (*sweep_cmd) {
      ExperimentConfig cfg = resolve_config(sweep_flags);
      std::vector<double> values;
      std::stringstream ss(sweep_values);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) values.push_back(std::stod(tok));
      optde::SweepReport rep = optde::sweep(cfg, sweep_param, values);
      std::printf("%s", rep.to_csv().c_str());
      return 0;
    }
    if (*verify_cmd) {
      ExperimentConfig cfg = resolve_config(verify_flags);
      optde::BuiltExperiment b = optde::build_experiment(cfg);
      optde::AssumptionOptions opts;
      opts.w0 = b.w0;
      optde::AssumptionReport rep =
          optde::verify_assumptions(b.problem, b.geometry, b.set, opts);
      std::printf("lipschitz: max ratio %.6g vs L %.6g -> %s\n",
                  rep.max_lipschitz_ratio, b.problem.lipschitz,
                  rep.lipschitz_ok ? "ok" : "FAIL");
      if (rep.has_solution)
        std::printf("weak slack: min %.6g -> %s\n", rep.min_weak_slack,
                    rep.weak_ok ? "ok" : "FAIL");
      if (b.problem.sigma > 0.0)
        std::printf("coherence slack: min %.6g -> %s\n", rep.min_coherence_slack,
                    rep.coherence_ok ? "ok" : "FAIL");
      std::printf("overall: %s\n", rep.pass ? "pass" : "fail");
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
