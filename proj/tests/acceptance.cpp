// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "ensrf/bounds.hpp"
#include "ensrf/convergence.hpp"
#include "ensrf/ensemble.hpp"
#include "ensrf/kalman.hpp"

using namespace ensrf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(const Matrix& a, const Matrix& b) {
  return spectral_norm(a - b) / std::max(spectral_norm(b), 1e-12);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool in_band(double slope) { return slope >= -0.65 && slope <= -0.35; }

Outcome exact_statistics() {
  const auto t0 = std::chrono::steady_clock::now();
  const FilteringProblem prob = make_synthetic_problem(4, 2, 10, 1001);
  const auto kf = kf_run({prob.background.mean, prob.background.covariance()}, prob.models,
                         prob.observations);
  const auto srf = srf_run(exact_moment_ensemble(prob.background), prob.models, prob.observations);
  double worst = 0.0;
  for (std::size_t k = 0; k < kf.size(); ++k) {
    worst = std::max(worst, rel(srf[k].forecast.mean, kf[k].forecast.mean));
    worst = std::max(worst, rel(srf[k].forecast.cov, kf[k].forecast.cov));
    worst = std::max(worst, rel(srf[k].analysis.mean, kf[k].analysis.mean));
    worst = std::max(worst, rel(srf[k].analysis.cov, kf[k].analysis.cov));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-8 && t < 1.0, fmt("max relative difference %.3g over 10 steps, %.3f s", worst, t)};
}

Outcome convergence_rate() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.problem = make_synthetic_problem(4, 2, 5, 20240601);
  cfg.ensemble_sizes = {16, 64, 256, 1024, 4096};
  cfg.replicates = 200;
  cfg.p_values = {1.0, 2.0};
  cfg.seed = 20240601;
  const ConvergenceReport r = srf_vs_kf_experiment(cfg);

  bool ok = true;
  double lo = 0.0, hi = -1.0;
  for (const SlopeRow& s : r.slopes) {
    for (const auto* fit : {&s.mean, &s.cov_spec}) {
      if (!*fit || !in_band((*fit)->slope)) {
        ok = false;
        continue;
      }
      lo = std::min(lo, (*fit)->slope);
      hi = std::max(hi, (*fit)->slope);
    }
  }
  // Median error must shrink from N = 16 to N = 4096 at every step.
  const std::size_t steps = cfg.problem.steps() + 1;
  for (std::size_t k = 0; k < steps; ++k) {
    const MedianRow& small = r.medians[k];
    const MedianRow& large = r.medians[4 * steps + k];
    if (!(large.mean_err < small.mean_err && large.cov_err_spec < small.cov_err_spec)) ok = false;
  }
  const double t = seconds_since(t0);
  return {ok && r.failures.empty(),
          fmt("12 mean and 12 covariance slopes in [%.3f, %.3f], %.1f s", lo, hi, t)};
}

Outcome bounds_fuzz() {
  const auto t0 = std::chrono::steady_clock::now();
  FuzzOptions opt;
  opt.n = 5;
  opt.m = 5;
  opt.trials = 10000;
  opt.seed = 4242;
  opt.max_condition = 1e6;
  opt.violation_tol = 1e-10;
  const FuzzSummary sum = fuzz_all_bounds(opt);
  double worst = INFINITY;
  for (const CheckSummary& c : sum.checks) worst = std::min(worst, c.worst_relative_slack);
  const double t = seconds_since(t0);
  std::string detail = fmt("%.0f violations in %.0f reports, worst relative slack %.3g",
                           double(sum.violations.size()), double(sum.reports_total), worst);
  detail += fmt(", %.1f s", t);
  return {sum.ok() && t < 30.0, detail};
}

Outcome etkf_unbiasedness() {
  std::mt19937_64 gen(314159);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim(1, 8), obs_dim(1, 6), members(2, 64);
  auto gaussian = [&](Index rows, Index cols) {
    Matrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) a(i, j) = normal(gen);
    return a;
  };
  double worst_mean = 0.0, worst_cov = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = dim(gen), m = obs_dim(gen), N = members(gen);
    Matrix x = gaussian(n, n) * gaussian(n, N);
    x.colwise() += Vector(5.0 * gaussian(n, 1));
    const Ensemble e(x);
    ObservationSpec obs;
    obs.H = gaussian(m, n);
    const Matrix g = gaussian(m, m + 2);
    obs.R = symmetrize(g * g.transpose() / double(m + 2) + 0.1 * Matrix::Identity(m, m));
    obs.d = Vector(3.0 * gaussian(m, 1));

    const Vector mean = ensemble_mean(e);
    const Matrix Q = ensemble_cov(e);
    const Ensemble a = etkf_analysis(e, obs);
    const double mean_err = (ensemble_mean(a) - analysis_mean(mean, Q, obs)).norm() / (1 + mean.norm());
    const double cov_err = rel(ensemble_cov(a), analysis_cov(Q, obs));
    worst_mean = std::max(worst_mean, mean_err);
    worst_cov = std::max(worst_cov, cov_err);
    if (!(mean_err <= 1e-10 && cov_err <= 1e-8)) ok = false;
  }
  return {ok, fmt("1000 ensembles, worst mean error %.3g (scaled), worst covariance error %.3g (relative)",
                  worst_mean, worst_cov)};
}

Outcome lln_rates() {
  const FactoredGaussian dist{Vector::Zero(1), Matrix::Identity(1, 1)};
  const std::vector<Index> sizes = {16, 64, 256, 1024, 4096};
  bool ok = true;
  double lo = 0.0, hi = -1.0, worst_ratio = 0.0;
  for (double p : {1.0, 2.0}) {
    const LlnReport mean = lln_mean_experiment(dist, sizes, 1000, p, 5150);
    const LlnReport cov = lln_cov_experiment(dist, sizes, 1000, p, 5150);
    for (const LlnReport* r : {&mean, &cov}) {
      if (!r->fit || !in_band(r->fit->slope)) {
        ok = false;
        continue;
      }
      lo = std::min(lo, r->fit->slope);
      hi = std::max(hi, r->fit->slope);
    }
    if (p == 2.0) {
      for (const LlnRow& row : mean.rows) {
        const double ratio = std::abs(row.error * std::sqrt(double(row.n_members)) - 1.0);
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio > 0.2) ok = false;
      }
    }
  }
  return {ok, fmt("slopes in [%.3f, %.3f]; L2 mean error within %.1f%% of 1/sqrt(N)", lo, hi,
                  100 * worst_ratio)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ensrf_acceptance_determinism";
  fs::remove_all(root);
  cli::CommonOptions opts;
  opts.config = std::string(ENSRF_CONFIG_DIR) + "/converge_desk.json";
  std::vector<std::string> outputs;
  bool ok = true;
  for (int threads : {1, 1, 2, 4}) {
    opts.threads = threads;
    opts.out = root / ("run" + std::to_string(outputs.size()));
    if (cli::cmd_converge(opts) != cli::kExitOk) ok = false;
    outputs.push_back(slurp(opts.out / "convergence.csv"));
  }
  for (const auto& o : outputs)
    if (o.empty() || o != outputs.front()) ok = false;
  fs::remove_all(root);
  return {ok, fmt("4 runs (threads 1, 1, 2, 4), %.0f-byte CSV, identical: ",
                  double(outputs.front().size())) +
                  (ok ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact-statistics oracle", exact_statistics},
      {"SRF-vs-KF convergence rate", convergence_rate},
      {"pointwise bounds fuzz", bounds_fuzz},
      {"ETKF unbiasedness", etkf_unbiasedness},
      {"LLN rates", lln_rates},
      {"converge determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
