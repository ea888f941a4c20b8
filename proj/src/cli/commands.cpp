#include "cli/commands.hpp"

#include <chrono>
#include <functional>
#include <iostream>

#include "cli/config.hpp"
#include "cli/output.hpp"
#include "ensrf/errors.hpp"

namespace ensrf::cli {

namespace fs = std::filesystem;

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    std::cerr << "ensrf: numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ExperimentAborted& e) {
    std::cerr << "ensrf: experiment aborted: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "ensrf: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "ensrf: config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

/// Shared bookkeeping for one command invocation.
class Run {
 public:
  Run(std::string command, const CommonOptions& opts)
      : opts_(opts), started_(std::chrono::steady_clock::now()) {
    manifest_.tool_version = ENSRF_VERSION;
    manifest_.command = std::move(command);
    manifest_.threads = opts.threads;
    manifest_.started_at = utc_now();
    fs::create_directories(opts.out);
  }

  void set_config(const std::string& hash, std::uint64_t seed) {
    manifest_.config_hash = hash;
    manifest_.master_seed = seed;
  }

  fs::path output(const std::string& name) {
    const fs::path p = opts_.out / name;
    manifest_.output_paths.push_back(p.string());
    return p;
  }

  void finish() {
    manifest_.finished_at = utc_now();
    manifest_.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    write_json(opts_.out / "manifest.json", manifest_.to_json());
  }

 private:
  const CommonOptions& opts_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point started_;
};

void state_row(CsvWriter& csv, std::size_t step, const char* stage, const GaussianState& s) {
  csv.field(std::uint64_t{step}).field(stage);
  for (Index i = 0; i < s.mean.size(); ++i) csv.field(s.mean(i));
  for (Index i = 0; i < s.cov.rows(); ++i)
    for (Index j = 0; j < s.cov.cols(); ++j) csv.field(s.cov(i, j));
  csv.end_row();
}

Json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json to_json(const Matrix& a) {
  Json rows = Json::array();
  for (Index i = 0; i < a.rows(); ++i) rows.push_back(to_json(Vector(a.row(i).transpose())));
  return rows;
}

Json to_json(const std::optional<RateFit>& fit) {
  if (!fit) return nullptr;
  return {{"slope", fit->slope},
          {"intercept", fit->intercept},
          {"halfWidth", fit->half_width},
          {"points", fit->points}};
}

const char* init_name(InitMode mode) {
  return mode == InitMode::Sample ? "sample" : "exact_moment";
}

void dump_members(CsvWriter& csv, std::size_t step, const Ensemble& e) {
  for (Index i = 0; i < e.size(); ++i) {
    csv.field(std::uint64_t{step}).field(static_cast<std::uint64_t>(i));
    for (Index r = 0; r < e.dim(); ++r) csv.field(e.members()(r, i));
    csv.end_row();
  }
}

}  // namespace

int cmd_kf_run(const CommonOptions& opts) {
  return guarded([&] {
    const LoadedConfig cfg = load_config(opts.config);
    const std::uint64_t seed = master_seed(cfg.doc, opts.seed);
    const FilteringProblem prob = parse_problem(cfg.doc, seed);
    Run run("kf-run", opts);
    run.set_config(cfg.hash, seed);

    const auto steps =
        kf_run({prob.background.mean, prob.background.covariance()}, prob.models, prob.observations);

    CsvWriter csv(run.output("kf.csv"));
    csv.header(state_columns(prob.state_dim()));
    for (std::size_t k = 0; k < steps.size(); ++k) {
      state_row(csv, k + 1, "forecast", steps[k].forecast);
      state_row(csv, k + 1, "analysis", steps[k].analysis);
    }
    csv.close();

    Json summary = {{"command", "kf-run"},
                    {"stateDim", prob.state_dim()},
                    {"steps", prob.steps()}};
    if (!steps.empty()) {
      summary["finalAnalysisMean"] = to_json(steps.back().analysis.mean);
      summary["finalAnalysisCov"] = to_json(steps.back().analysis.cov);
    }
    write_json(run.output("summary.json"), summary);
    run.finish();
    return kExitOk;
  });
}

int cmd_srf_run(const CommonOptions& opts, bool dump_ensemble) {
  return guarded([&] {
    const LoadedConfig cfg = load_config(opts.config);
    const std::uint64_t seed = master_seed(cfg.doc, opts.seed);
    const FilteringProblem prob = parse_problem(cfg.doc, seed);
    const EnsembleSettings ens = parse_ensemble(cfg.doc, prob.state_dim());
    Run run("srf-run", opts);
    run.set_config(cfg.hash, seed);

    const Ensemble init =
        ens.init == InitMode::Sample
            ? sample_initial_ensemble(prob.background, ens.size, seed)
            : exact_moment_ensemble(prob.background, ens.size / (2 * prob.state_dim()));
    const auto steps = srf_run(init, prob.models, prob.observations);

    CsvWriter csv(run.output("srf.csv"));
    csv.header(state_columns(prob.state_dim()));
    for (std::size_t k = 0; k < steps.size(); ++k) {
      state_row(csv, k + 1, "forecast", steps[k].forecast);
      state_row(csv, k + 1, "analysis", steps[k].analysis);
    }
    csv.close();

    if (dump_ensemble) {
      CsvWriter dump(run.output("ensemble.csv"));
      std::vector<std::string> cols = {"step", "member"};
      for (Index i = 0; i < prob.state_dim(); ++i) cols.push_back("x_" + std::to_string(i));
      dump.header(cols);
      dump_members(dump, 0, init);
      for (std::size_t k = 0; k < steps.size(); ++k) dump_members(dump, k + 1, steps[k].ensemble);
      dump.close();
    }

    Json summary = {{"command", "srf-run"},
                    {"stateDim", prob.state_dim()},
                    {"steps", prob.steps()},
                    {"ensembleSize", init.size()},
                    {"init", init_name(ens.init)}};
    if (!steps.empty()) {
      summary["finalAnalysisMean"] = to_json(steps.back().analysis.mean);
      summary["finalAnalysisCov"] = to_json(steps.back().analysis.cov);
    }
    write_json(run.output("summary.json"), summary);
    run.finish();
    return kExitOk;
  });
}

int cmd_converge(const CommonOptions& opts) {
  return guarded([&] {
    const LoadedConfig cfg = load_config(opts.config);
    const std::uint64_t seed = master_seed(cfg.doc, opts.seed);
    const ExperimentConfig exp =
        parse_experiment(cfg.doc, parse_problem(cfg.doc, seed), seed, opts.threads);
    Run run("converge", opts);
    run.set_config(cfg.hash, seed);

    const ConvergenceReport report = srf_vs_kf_experiment(exp);

    CsvWriter csv(run.output("convergence.csv"));
    csv.header({"step", "p", "N", "meanErr", "covErrSpec", "covErrHS", "replicates"});
    for (const ConvergenceRow& row : report.rows) {
      csv.field(std::uint64_t{row.step})
          .field(row.p)
          .field(static_cast<std::uint64_t>(row.n_members))
          .field(row.mean_err)
          .field(row.cov_err_spec)
          .field(row.cov_err_hs)
          .field(std::uint64_t{row.replicates});
      csv.end_row();
    }
    csv.close();

    Json slopes = Json::array();
    for (const SlopeRow& s : report.slopes)
      slopes.push_back({{"step", s.step},
                        {"p", s.p},
                        {"mean", to_json(s.mean)},
                        {"covSpec", to_json(s.cov_spec)},
                        {"covHS", to_json(s.cov_hs)}});
    Json medians = Json::array();
    for (const MedianRow& m : report.medians)
      medians.push_back({{"step", m.step},
                         {"N", m.n_members},
                         {"meanErr", m.mean_err},
                         {"covErrSpec", m.cov_err_spec}});
    Json failures = Json::array();
    for (const ReplicateFailure& f : report.failures)
      failures.push_back({{"N", f.n_members},
                          {"replicate", f.replicate},
                          {"seed", f.seed},
                          {"message", f.message}});
    const Json summary = {{"command", "converge"},
                          {"stateDim", exp.problem.state_dim()},
                          {"steps", exp.problem.steps()},
                          {"ensembleSizes", exp.ensemble_sizes},
                          {"replicates", exp.replicates},
                          {"p", exp.p_values},
                          {"init", init_name(exp.init)},
                          {"slopes", slopes},
                          {"medians", medians},
                          {"failures", failures}};
    write_json(run.output("summary.json"), summary);
    run.finish();
    return kExitOk;
  });
}

int cmd_bounds_fuzz(const CommonOptions& opts, const FuzzFlags& flags) {
  return guarded([&] {
    Json doc = Json::object();
    if (!opts.config.empty()) doc = load_config(opts.config).doc;
    const std::uint64_t seed = master_seed(doc, opts.seed);
    FuzzOptions fo = parse_fuzz(doc, seed);
    if (flags.n) fo.n = *flags.n;
    if (flags.m) fo.m = *flags.m;
    if (flags.trials) fo.trials = *flags.trials;
    if (flags.max_condition) fo.max_condition = *flags.max_condition;
    if (flags.violation_tol) fo.violation_tol = *flags.violation_tol;
    fo.threads = opts.threads;
    if (flags.corrupt) {
      fo.corrupt = bound_check_from_string(*flags.corrupt);
      if (!fo.corrupt) throw ConfigError("--corrupt: unknown check '" + *flags.corrupt + "'");
    }

    // The effective options are the configuration that gets hashed.
    Json effective = {{"n", fo.n},
                      {"m", fo.m},
                      {"trials", fo.trials},
                      {"seed", fo.seed},
                      {"maxCondition", fo.max_condition},
                      {"violationTol", fo.violation_tol}};
    if (fo.corrupt) effective["corrupt"] = std::string(to_string(*fo.corrupt));

    Run run("bounds-fuzz", opts);
    run.set_config(sha256_hex(canonicalize(effective)), seed);
    const FuzzSummary sum = fuzz_all_bounds(fo);

    Json checks = Json::array();
    for (const CheckSummary& c : sum.checks)
      checks.push_back({{"name", std::string(to_string(c.check))},
                        {"evaluated", c.evaluated},
                        {"passed", c.passed},
                        {"worstSlack", c.worst_slack},
                        {"worstRelativeSlack", c.worst_relative_slack},
                        {"worstDigest", c.worst_digest},
                        {"sharperViolations", c.sharper_violations}});
    Json violations = Json::array();
    for (const Violation& v : sum.violations)
      violations.push_back({{"trial", v.trial},
                            {"seed", v.trial_seed},
                            {"check", std::string(to_string(v.report.check))},
                            {"lhs", v.report.lhs},
                            {"rhs", v.report.rhs},
                            {"slack", v.report.slack},
                            {"digest", v.report.inputs_digest}});
    const Json report = {{"command", "bounds-fuzz"},
                         {"options", effective},
                         {"ok", sum.ok()},
                         {"reportsPassed", sum.reports_passed},
                         {"reportsTotal", sum.reports_total},
                         {"monotonicityFailures", sum.monotonicity_failures},
                         {"checks", checks},
                         {"violations", violations}};
    write_json(run.output("bounds.json"), report);
    run.finish();

    if (!sum.ok()) {
      std::cerr << "ensrf: " << sum.violations.size() << " bound violations, "
                << sum.monotonicity_failures << " monotonicity failures\n";
      for (std::size_t i = 0; i < std::min<std::size_t>(5, sum.violations.size()); ++i) {
        const Violation& v = sum.violations[i];
        std::cerr << "  " << to_string(v.report.check) << " trial " << v.trial << " seed "
                  << v.trial_seed << " slack " << format_double(v.report.slack) << '\n';
      }
      return kExitViolations;
    }
    return kExitOk;
  });
}

}  // namespace ensrf::cli
