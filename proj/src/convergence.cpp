#include "ensrf/convergence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "ensrf/bounds.hpp"
#include "ensrf/errors.hpp"
#include "ensrf/random.hpp"

namespace ensrf {

double lp_estimate(std::span<const double> samples, double p) {
  if (samples.empty()) throw ConfigError("lp_estimate: no samples");
  if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("lp_estimate: order p must be >= 1");
  double sum = 0.0;
  for (double s : samples) {
    if (!(s >= 0.0)) throw InvalidInput("lp_estimate: samples must be nonnegative");
    sum += p == 1.0 ? s : std::pow(s, p);
  }
  const double mean = sum / static_cast<double>(samples.size());
  return p == 1.0 ? mean : std::pow(mean, 1.0 / p);
}

RateFit rate_fit(std::span<const std::pair<double, double>> points) {
  std::vector<double> x, y;
  std::set<double> distinct;
  for (const auto& [n, err] : points) {
    if (!(err > 0.0) || !std::isfinite(err) || !(n > 0.0)) continue;
    x.push_back(std::log(n));
    y.push_back(std::log(err));
    distinct.insert(n);
  }
  if (distinct.size() < 3)
    throw InsufficientData("rate_fit: need at least 3 distinct N with positive error, have " +
                           std::to_string(distinct.size()));
  const auto count = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.half_width = 2.0 * std::sqrt(ssr / (count - 2.0) / sxx);
  fit.points = x.size();
  return fit;
}

namespace {

double spectral_radius(const Matrix& a) {
  Eigen::EigenSolver<Matrix> eig(a, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix full_rank_gaussian(Philox4x32& rng, Index rows, Index cols) {
  for (;;) {
    Matrix H = standard_normal(rng, rows, cols);
    Eigen::JacobiSVD<Matrix> svd(H);
    svd.setThreshold(1e-8);
    if (svd.rank() == std::min(rows, cols)) return H;
  }
}

}  // namespace

FilteringProblem make_synthetic_problem(Index n, Index m, std::size_t steps, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ConfigError("make_synthetic_problem: n and m must be >= 1");
  Philox4x32 rng(seed, 0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  FilteringProblem p;
  p.background.mean = standard_normal(rng, n);
  p.background.factor = standard_normal(rng, n, n) * scale;

  Vector x = p.background.mean + p.background.factor * standard_normal(rng, n);
  p.truth.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) {
    LinearModelStep model;
    const Matrix G = standard_normal(rng, n, n) * scale;
    const double rho = spectral_radius(G);
    const double target = uniform(rng, 0.9, 1.05);
    model.M = rho > 0.0 ? Matrix(G * (target / rho)) : G;
    model.b = 0.1 * standard_normal(rng, n);

    ObservationSpec obs;
    obs.H = full_rank_gaussian(rng, m, n);
    obs.R = random_spd(m, rng, 0.5);
    x = model.M * x + model.b;
    const Matrix chol_r = Eigen::LLT<Matrix>(obs.R).matrixL();
    obs.d = obs.H * x + chol_r * standard_normal(rng, m);

    p.truth.push_back(x);
    p.models.push_back(std::move(model));
    p.observations.push_back(std::move(obs));
  }
  return p;
}

std::uint64_t replicate_seed(std::uint64_t master, Index n_members, std::size_t replicate) {
  return derive_seed(master, {static_cast<std::uint64_t>(n_members), replicate});
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

std::optional<RateFit> try_fit(const std::vector<std::pair<double, double>>& pts) {
  try {
    return rate_fit(pts);
  } catch (const InsufficientData&) {
    return std::nullopt;
  }
}

void check_lln_args(std::span<const Index> sizes, std::size_t replicates, double p) {
  if (sizes.empty()) throw ConfigError("lln experiment: no ensemble sizes");
  for (Index n : sizes)
    if (n < 2) throw ConfigError("lln experiment: ensemble sizes must be >= 2");
  if (replicates < 1) throw ConfigError("lln experiment: replicates must be >= 1");
  if (!(p >= 1.0)) throw ConfigError("lln experiment: p must be >= 1");
}

LlnReport lln_experiment(const FactoredGaussian& dist, std::span<const Index> sizes,
                         std::size_t replicates, double p, std::uint64_t seed, int threads,
                         const std::function<double(const Ensemble&)>& error_of) {
  check_lln_args(sizes, replicates, p);
  const std::size_t tasks = sizes.size() * replicates;
  std::vector<double> errors(tasks);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads))
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(tasks); ++t) {
    const auto i = static_cast<std::size_t>(t);
    const Index n_members = sizes[i / replicates];
    const Ensemble e =
        sample_initial_ensemble(dist, n_members, replicate_seed(seed, n_members, i % replicates));
    errors[i] = error_of(e);
  }

  LlnReport report;
  report.p = p;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    std::vector<double> samples(errors.begin() + static_cast<std::ptrdiff_t>(a * replicates),
                                errors.begin() + static_cast<std::ptrdiff_t>((a + 1) * replicates));
    LlnRow row{sizes[a], lp_estimate(samples, p), median_of(samples)};
    pts.emplace_back(static_cast<double>(row.n_members), row.error);
    report.rows.push_back(row);
  }
  report.fit = try_fit(pts);
  return report;
}

}  // namespace

LlnReport lln_mean_experiment(const FactoredGaussian& dist, std::span<const Index> sizes,
                              std::size_t replicates, double p, std::uint64_t seed, int threads) {
  return lln_experiment(dist, sizes, replicates, p, seed, threads, [&](const Ensemble& e) {
    return (ensemble_mean(e) - dist.mean).norm();
  });
}

LlnReport lln_cov_experiment(const FactoredGaussian& dist, std::span<const Index> sizes,
                             std::size_t replicates, double p, std::uint64_t seed, int threads) {
  const Matrix cov = dist.covariance();
  return lln_experiment(dist, sizes, replicates, p, seed, threads, [&](const Ensemble& e) {
    return hs_norm(ensemble_cov(e) - cov);
  });
}

void ExperimentConfig::validate() const {
  if (ensemble_sizes.empty()) throw ConfigError("experiment: no ensemble sizes");
  for (Index n : ensemble_sizes)
    if (n < 2) throw ConfigError("experiment: ensemble sizes must be >= 2, got " + std::to_string(n));
  if (replicates < 1) throw ConfigError("experiment: replicates must be >= 1");
  if (p_values.empty()) throw ConfigError("experiment: no Lp orders");
  for (double p : p_values)
    if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("experiment: Lp orders must be >= 1");
  if (problem.models.size() != problem.observations.size())
    throw ConfigError("experiment: model and observation sequences differ in length");
  const Index n = problem.state_dim();
  if (n < 1 || problem.background.factor.rows() != n)
    throw ConfigError("experiment: background factor does not match the state dimension");
  if (init == InitMode::ExactMoment) {
    if (problem.background.factor.cols() != n)
      throw ConfigError("experiment: exact-moment initialization needs a square factor");
    for (Index size : ensemble_sizes)
      if (size % (2 * n) != 0)
        throw ConfigError("experiment: exact-moment initialization needs N divisible by 2n = " +
                          std::to_string(2 * n) + ", got " + std::to_string(size));
  }
}

namespace {

struct StepErrors {
  std::vector<double> mean, spec, hs;  // indexed by step 0..K
};

struct ReplicateOutcome {
  StepErrors errors;
  std::string failure;
};

void push_errors(StepErrors& out, const Vector& mean, const Matrix& cov, const GaussianState& ref) {
  out.mean.push_back((mean - ref.mean).norm());
  const Matrix diff = cov - ref.cov;
  out.spec.push_back(spectral_norm(diff));
  out.hs.push_back(hs_norm(diff));
}

}  // namespace

ConvergenceReport srf_vs_kf_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const FilteringProblem& prob = cfg.problem;
  const Index n = prob.state_dim();
  const std::size_t steps = prob.steps();

  std::vector<GaussianState> reference;
  reference.push_back({prob.background.mean, prob.background.covariance()});
  for (KalmanStep& s : kf_run(reference.front(), prob.models, prob.observations, cfg.tol))
    reference.push_back(std::move(s.analysis));

  const std::size_t reps = cfg.replicates;
  const std::size_t tasks = cfg.ensemble_sizes.size() * reps;
  std::vector<ReplicateOutcome> outcomes(tasks);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, cfg.threads))
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(tasks); ++t) {
    const auto i = static_cast<std::size_t>(t);
    const Index n_members = cfg.ensemble_sizes[i / reps];
    ReplicateOutcome& out = outcomes[i];
    try {
      const Ensemble init =
          cfg.init == InitMode::Sample
              ? sample_initial_ensemble(prob.background, n_members,
                                        replicate_seed(cfg.seed, n_members, i % reps))
              : exact_moment_ensemble(prob.background, n_members / (2 * n), cfg.tol);
      push_errors(out.errors, ensemble_mean(init), ensemble_cov(init), reference[0]);
      const auto run = srf_run(init, prob.models, prob.observations, cfg.tol);
      for (std::size_t k = 0; k < steps; ++k)
        push_errors(out.errors, run[k].analysis.mean, run[k].analysis.cov, reference[k + 1]);
    } catch (const Error& e) {
      out.failure = e.what();
    }
  }

  ConvergenceReport report;
  for (std::size_t i = 0; i < tasks; ++i) {
    if (outcomes[i].failure.empty()) continue;
    const Index n_members = cfg.ensemble_sizes[i / reps];
    report.failures.push_back({n_members, i % reps, replicate_seed(cfg.seed, n_members, i % reps),
                               outcomes[i].failure});
  }
  if (static_cast<double>(report.failures.size()) >
      cfg.max_failure_fraction * static_cast<double>(tasks)) {
    std::ostringstream os;
    os << "srf_vs_kf_experiment: " << report.failures.size() << " of " << tasks
       << " replicates failed; first failures:";
    for (std::size_t j = 0; j < std::min<std::size_t>(5, report.failures.size()); ++j) {
      const auto& f = report.failures[j];
      os << "\n  N=" << f.n_members << " replicate=" << f.replicate << " seed=" << f.seed << ": "
         << f.message;
    }
    throw ExperimentAborted(os.str());
  }

  // samples[a][k] for one error kind, over successful replicates in order.
  auto gather = [&](std::size_t a, std::size_t k, auto member) {
    std::vector<double> v;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& o = outcomes[a * reps + r];
      if (o.failure.empty()) v.push_back((o.errors.*member)[k]);
    }
    return v;
  };

  for (std::size_t a = 0; a < cfg.ensemble_sizes.size(); ++a) {
    const Index n_members = cfg.ensemble_sizes[a];
    for (std::size_t k = 0; k <= steps; ++k) {
      const auto mean = gather(a, k, &StepErrors::mean);
      const auto spec = gather(a, k, &StepErrors::spec);
      report.medians.push_back({k, n_members, median_of(mean), median_of(spec)});
    }
    for (double p : cfg.p_values) {
      for (std::size_t k = 0; k <= steps; ++k) {
        const auto mean = gather(a, k, &StepErrors::mean);
        if (mean.empty()) continue;
        ConvergenceRow row;
        row.step = k;
        row.p = p;
        row.n_members = n_members;
        row.mean_err = lp_estimate(mean, p);
        row.cov_err_spec = lp_estimate(gather(a, k, &StepErrors::spec), p);
        row.cov_err_hs = lp_estimate(gather(a, k, &StepErrors::hs), p);
        row.replicates = mean.size();
        report.rows.push_back(row);
      }
    }
  }

  for (double p : cfg.p_values) {
    for (std::size_t k = 0; k <= steps; ++k) {
      std::vector<std::pair<double, double>> mean, spec, hs;
      for (const ConvergenceRow& row : report.rows) {
        if (row.p != p || row.step != k) continue;
        const auto size = static_cast<double>(row.n_members);
        mean.emplace_back(size, row.mean_err);
        spec.emplace_back(size, row.cov_err_spec);
        hs.emplace_back(size, row.cov_err_hs);
      }
      report.slopes.push_back({k, p, try_fit(mean), try_fit(spec), try_fit(hs)});
    }
  }

  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace ensrf
