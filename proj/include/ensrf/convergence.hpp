#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ensrf/ensemble.hpp"
#include "ensrf/kalman.hpp"

namespace ensrf {

/// Plug-in Lp norm ((1/M) sum s_i^p)^{1/p} of nonnegative samples.
double lp_estimate(std::span<const double> samples, double p);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;  // two standard errors of the slope
  std::size_t points = 0;
};

/// Least squares of log(err) on log(N). Points with err <= 0 are dropped;
/// throws InsufficientData when fewer than 3 distinct N remain.
RateFit rate_fit(std::span<const std::pair<double, double>> points);

/// Background distribution, model sequence, observation sequence and (for
/// synthetic problems) the truth trajectory the data were drawn from.
struct FilteringProblem {
  FactoredGaussian background;
  std::vector<LinearModelStep> models;
  std::vector<ObservationSpec> observations;
  std::vector<Vector> truth;  // x_0 .. x_K, empty when not synthetic

  Index state_dim() const { return background.mean.size(); }
  std::size_t steps() const { return models.size(); }
};

/// Twin-experiment problem: random square background factor, models with
/// spectral radius in [0.9, 1.05], Gaussian H, R = Wishart + 0.5 I, and data
/// d_k = H x_k + N(0, R) along a truth trajectory started from the background.
FilteringProblem make_synthetic_problem(Index n, Index m, std::size_t steps, std::uint64_t seed);

/// Seed of replicate `replicate` at ensemble size N.
std::uint64_t replicate_seed(std::uint64_t master, Index n_members, std::size_t replicate);

struct LlnRow {
  Index n_members = 0;
  double error = 0.0;   // Lp estimate over replicates
  double median = 0.0;  // median raw error
};

struct LlnReport {
  double p = 2.0;
  std::vector<LlnRow> rows;
  std::optional<RateFit> fit;
};

/// ||E_N(X_N) - E(X_1)||_p for each N, from `replicates` independent ensembles.
LlnReport lln_mean_experiment(const FactoredGaussian& dist, std::span<const Index> sizes,
                              std::size_t replicates, double p, std::uint64_t seed,
                              int threads = 1);

/// || |C_N(X_N) - Cov(X_1)|_HS ||_p for each N.
LlnReport lln_cov_experiment(const FactoredGaussian& dist, std::span<const Index> sizes,
                             std::size_t replicates, double p, std::uint64_t seed,
                             int threads = 1);

enum class InitMode {
  Sample,       // i.i.d. draws from the background
  ExactMoment,  // replicated exact_moment_ensemble; N must be a multiple of 2n
};

struct ExperimentConfig {
  FilteringProblem problem;
  std::vector<Index> ensemble_sizes;
  std::size_t replicates = 200;
  std::vector<double> p_values{1.0, 2.0};
  std::uint64_t seed = 0;
  InitMode init = InitMode::Sample;
  int threads = 1;
  double max_failure_fraction = 0.01;
  Tolerances tol{};

  /// Throws ConfigError on N < 2, M < 1, p < 1, mismatched sequences.
  void validate() const;
};

struct ConvergenceRow {
  std::size_t step = 0;
  double p = 0.0;
  Index n_members = 0;
  double mean_err = 0.0;
  double cov_err_spec = 0.0;
  double cov_err_hs = 0.0;
  std::size_t replicates = 0;
};

struct SlopeRow {
  std::size_t step = 0;
  double p = 0.0;
  std::optional<RateFit> mean;
  std::optional<RateFit> cov_spec;
  std::optional<RateFit> cov_hs;
};

struct MedianRow {
  std::size_t step = 0;
  Index n_members = 0;
  double mean_err = 0.0;
  double cov_err_spec = 0.0;
};

struct ReplicateFailure {
  Index n_members = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;  // ordered by (N, p, step)
  std::vector<SlopeRow> slopes;      // ordered by (p, step)
  std::vector<MedianRow> medians;    // ordered by (N, step)
  std::vector<ReplicateFailure> failures;
  double elapsed_seconds = 0.0;
};

/// SRF ensemble statistics against the Kalman filter, step 0 (initial
/// ensemble vs background) through K. Replicate failures are recorded and the
/// experiment continues; more than max_failure_fraction of failed replicates
/// throws ExperimentAborted. Everything except elapsed_seconds is independent
/// of the thread count.
ConvergenceReport srf_vs_kf_experiment(const ExperimentConfig& cfg);

}  // namespace ensrf
