#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace ensrf::cli;

  CLI::App app{"Kalman and square-root ensemble filters, bound fuzzing and convergence experiments"};
  app.set_version_flag("--version", ENSRF_VERSION);
  app.require_subcommand(1);

  CommonOptions opts;
  bool dump_ensemble = false;
  FuzzFlags fuzz;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opts.config, "JSON configuration file");
    if (config_required) c->required();
    sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opts.seed, "Master seed (overrides the config)");
    sub->add_option("--threads", opts.threads, "Worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };

  auto* kf = app.add_subcommand("kf-run", "Run the Kalman filter");
  add_common(kf, true);
  auto* srf = app.add_subcommand("srf-run", "Run the square-root ensemble filter");
  add_common(srf, true);
  srf->add_flag("--dump-ensemble", dump_ensemble, "Also write every analysis ensemble");
  auto* conv = app.add_subcommand("converge", "Ensemble vs Kalman convergence experiment");
  add_common(conv, true);
  auto* bf = app.add_subcommand("bounds-fuzz", "Fuzz the pointwise analysis bounds");
  add_common(bf, false);
  bf->add_option("--n", fuzz.n, "State dimension");
  bf->add_option("--m", fuzz.m, "Observation dimension");
  bf->add_option("--trials", fuzz.trials, "Number of randomized trials");
  bf->add_option("--max-condition", fuzz.max_condition, "Largest condition number of P and Q");
  bf->add_option("--violation-tol", fuzz.violation_tol, "Relative violation tolerance");
  bf->add_option("--corrupt", fuzz.corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (*kf) return cmd_kf_run(opts);
  if (*srf) return cmd_srf_run(opts, dump_ensemble);
  if (*conv) return cmd_converge(opts);
  return cmd_bounds_fuzz(opts, fuzz);
}
