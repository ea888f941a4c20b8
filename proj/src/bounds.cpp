#include "ensrf/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ensrf/convergence.hpp"
#include "ensrf/errors.hpp"

namespace ensrf {

namespace {

constexpr std::array<std::string_view, 8> kCheckNames = {
    "gain_continuity", "gain_norm",     "bmean_norm",       "acov_continuity",
    "loewner_lower",   "loewner_upper", "bmean_continuity", "lp_cauchy_schwarz"};

BoundReport make_report(BoundCheck check, double lhs, double rhs, double scale) {
  BoundReport r;
  r.check = check;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.scale = scale;
  return r;
}

void require_psd_pair(const Matrix& P, const Matrix& Q, const Tolerances& tol) {
  require_symmetric_psd(P, tol, "bound check P");
  require_symmetric_psd(Q, tol, "bound check Q");
}

}  // namespace

std::string_view to_string(BoundCheck check) { return kCheckNames[static_cast<std::size_t>(check)]; }

std::optional<BoundCheck> bound_check_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kCheckNames.size(); ++i)
    if (kCheckNames[i] == name) return static_cast<BoundCheck>(i);
  return std::nullopt;
}

bool BoundReport::passes(double violation_tol) const {
  return slack >= -violation_tol * std::max(1.0, scale);
}

ObsConstants ObsConstants::of(const ObservationSpec& obs, const Tolerances& tol) {
  ObsConstants k;
  k.h_norm = spectral_norm(obs.H);
  k.r_inv_norm = spectral_norm(spd_inverse(obs.R, tol));
  k.c = k.h_norm * k.h_norm * k.r_inv_norm;
  return k;
}

double gain_continuity_rhs(double diff_norm, const ObsConstants& k, double weight_norm) {
  return diff_norm * k.h_norm * k.r_inv_norm * (1.0 + weight_norm * k.c);
}

BoundReport check_gain_continuity(const Matrix& P, const Matrix& Q, const ObservationSpec& obs,
                                  const Tolerances& tol) {
  require_psd_pair(P, Q, tol);
  const ObsConstants k = ObsConstants::of(obs, tol);
  const double lhs = spectral_norm(kalman_gain(Q, obs, tol) - kalman_gain(P, obs, tol));
  const double weight = std::min(spectral_norm(P), spectral_norm(Q));
  const double rhs = gain_continuity_rhs(spectral_norm(Q - P), k, weight);
  return make_report(BoundCheck::GainContinuity, lhs, rhs, rhs);
}

BoundReport check_gain_norm(const Matrix& Q, const ObservationSpec& obs, const Tolerances& tol) {
  require_symmetric_psd(Q, tol, "bound check Q");
  const ObsConstants k = ObsConstants::of(obs, tol);
  const double lhs = spectral_norm(kalman_gain(Q, obs, tol));
  const double rhs = spectral_norm(Q) * k.h_norm * k.r_inv_norm;
  return make_report(BoundCheck::GainNorm, lhs, rhs, rhs);
}

BoundReport check_bmean_norm(const Vector& X, const Matrix& Q, const ObservationSpec& obs,
                             const Tolerances& tol) {
  require_symmetric_psd(Q, tol, "bound check Q");
  const ObsConstants k = ObsConstants::of(obs, tol);
  const double lhs = analysis_mean(X, Q, obs, tol).norm();
  const double rhs =
      X.norm() + spectral_norm(Q) * k.h_norm * k.r_inv_norm * (obs.d - obs.H * X).norm();
  return make_report(BoundCheck::MeanNorm, lhs, rhs, rhs);
}

BoundReport check_acov_continuity(const Matrix& P, const Matrix& Q, const ObservationSpec& obs,
                                  const Tolerances& tol) {
  require_psd_pair(P, Q, tol);
  const ObsConstants k = ObsConstants::of(obs, tol);
  const double lhs = spectral_norm(analysis_cov(Q, obs, tol) - analysis_cov(P, obs, tol));
  const double diff = spectral_norm(Q - P);
  const double np = spectral_norm(P);
  const double nq = spectral_norm(Q);
  const double c = k.c;
  const double rhs = diff * (1.0 + c * nq + c * np + c * c * np * nq);
  BoundReport r = make_report(BoundCheck::CovContinuity, lhs, rhs, rhs);
  r.sharper_rhs = diff * (1.0 + c * nq + c * np + c * c * std::min({np * np, np * nq, nq * nq}));
  return r;
}

std::pair<BoundReport, BoundReport> check_loewner_sandwich(const Matrix& Q,
                                                           const ObservationSpec& obs,
                                                           const Tolerances& tol) {
  require_symmetric_psd(Q, tol, "bound check Q");
  const Matrix A = analysis_cov(Q, obs, tol);
  const double scale = spectral_norm(Q);
  const Matrix zero = Matrix::Zero(Q.rows(), Q.cols());
  return {make_report(BoundCheck::LoewnerLower, 0.0, loewner_slack(zero, A, tol), scale),
          make_report(BoundCheck::LoewnerUpper, 0.0, loewner_slack(A, Q, tol), scale)};
}

BoundReport check_bmean_continuity(const Vector& X, const Matrix& Q, const Vector& Y,
                                   const Matrix& P, const ObservationSpec& obs,
                                   const Tolerances& tol) {
  require_psd_pair(P, Q, tol);
  if (X.size() != Y.size()) throw ShapeError("check_bmean_continuity: X and Y differ in length");
  const ObsConstants k = ObsConstants::of(obs, tol);
  const double lhs = (analysis_mean(X, Q, obs, tol) - analysis_mean(Y, P, obs, tol)).norm();
  const double np = spectral_norm(P);
  const double nq = spectral_norm(Q);
  const double rhs = (X - Y).norm() * (1.0 + k.c * nq) +
                     spectral_norm(Q - P) * k.h_norm * k.r_inv_norm * (1.0 + k.c * np) *
                         (obs.d - obs.H * Y).norm();
  return make_report(BoundCheck::MeanContinuity, lhs, rhs, rhs);
}

BoundReport check_lp_cauchy_schwarz(std::span<const double> u, std::span<const double> v,
                                    double p) {
  if (u.size() != v.size()) throw ShapeError("check_lp_cauchy_schwarz: sample counts differ");
  std::vector<double> product(u.size()), au(u.size()), av(v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    au[i] = std::abs(u[i]);
    av[i] = std::abs(v[i]);
    product[i] = au[i] * av[i];
  }
  const double lhs = lp_estimate(product, p);
  const double rhs = lp_estimate(au, 2.0 * p) * lp_estimate(av, 2.0 * p);
  BoundReport r = make_report(BoundCheck::LpCauchySchwarz, lhs, rhs, rhs);
  r.inputs_digest = "samples=" + std::to_string(u.size()) + " p=" + std::to_string(p);
  return r;
}

Matrix random_psd(Index n, Philox4x32& rng, double max_condition) {
  const Matrix G = standard_normal(rng, n, n);
  Matrix W = symmetrize(G * G.transpose() / static_cast<double>(n));
  const double mode = uniform(rng, 0.0, 1.0);
  if (mode < 0.4 || n < 2) return W;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(W);
  const double top = eig.eigenvalues()(n - 1);
  const double log_kappa = uniform(rng, 0.0, std::log10(std::max(1.0, max_condition)));
  // Exponents in [0, 1]: smallest eigenvalue gets 1, largest 0.
  std::vector<double> s(static_cast<std::size_t>(n));
  s.front() = 1.0;
  s.back() = 0.0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) s[i] = uniform(rng, 0.0, 1.0);
  std::sort(s.begin() + 1, s.end() - 1, std::greater<>());
  Vector lambda(n);
  for (Index i = 0; i < n; ++i)
    lambda(i) = top * std::pow(10.0, -log_kappa * s[static_cast<std::size_t>(i)]);
  if (mode > 0.9) lambda(0) = 0.0;  // rank deficient
  return symmetrize(eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose());
}

Matrix random_spd(Index n, Philox4x32& rng, double ridge) {
  const Matrix G = standard_normal(rng, n, n);
  Matrix W = G * G.transpose() / static_cast<double>(n);
  W.diagonal().array() += ridge;
  return symmetrize(W);
}

FuzzTrialInputs generate_trial_inputs(const FuzzOptions& options, std::size_t trial) {
  FuzzTrialInputs in;
  in.trial = trial;
  in.trial_seed = derive_seed(options.seed, {trial});
  Philox4x32 rng(in.trial_seed, 0);
  const Index n = options.n;
  const Index m = options.m;

  in.Q = random_psd(n, rng, options.max_condition) * std::pow(10.0, uniform(rng, -1.0, 1.0));
  const double p_mode = uniform(rng, 0.0, 1.0);
  if (p_mode < 0.55) {
    in.P = random_psd(n, rng, options.max_condition) * std::pow(10.0, uniform(rng, -1.0, 1.0));
  } else if (p_mode < 0.95) {
    // Nearby pair: the regime where the continuity bounds are exercised.
    const Matrix E = standard_normal(rng, n, n);
    const double eps = std::pow(10.0, uniform(rng, -6.0, -1.0));
    in.P = clamp_psd(symmetrize(in.Q + eps * spectral_norm(in.Q) * symmetrize(E) /
                                           std::sqrt(static_cast<double>(n))));
  } else {
    in.P = Matrix::Zero(n, n);
  }

  in.obs.H = standard_normal(rng, m, n);
  in.obs.R = random_spd(m, rng, 0.1) * std::pow(10.0, uniform(rng, -1.0, 1.0));
  in.obs.d = 2.0 * standard_normal(rng, m);
  in.X = standard_normal(rng, n);
  in.Y = uniform(rng, 0.0, 1.0) < 0.5 ? Vector(in.X + 1e-3 * standard_normal(rng, n))
                                      : standard_normal(rng, n);
  return in;
}

std::vector<BoundReport> evaluate_trial(const FuzzTrialInputs& in, const FuzzOptions& options) {
  const Tolerances tol{};
  std::vector<BoundReport> reports;
  reports.reserve(kAllBoundChecks.size());
  reports.push_back(check_gain_continuity(in.P, in.Q, in.obs, tol));
  reports.push_back(check_gain_norm(in.Q, in.obs, tol));
  reports.push_back(check_bmean_norm(in.X, in.Q, in.obs, tol));
  reports.push_back(check_acov_continuity(in.P, in.Q, in.obs, tol));
  auto [lower, upper] = check_loewner_sandwich(in.Q, in.obs, tol);
  reports.push_back(std::move(lower));
  reports.push_back(std::move(upper));
  reports.push_back(check_bmean_continuity(in.X, in.Q, in.Y, in.P, in.obs, tol));

  char digest[96];
  std::snprintf(digest, sizeof digest, "seed=%016llx trial=%zu n=%ld m=%ld",
                static_cast<unsigned long long>(in.trial_seed), in.trial,
                static_cast<long>(options.n), static_cast<long>(options.m));
  for (BoundReport& r : reports) {
    r.inputs_digest = digest;
    if (options.corrupt && *options.corrupt == r.check) {
      r.rhs = r.lhs - (1.0 + r.scale);
      r.slack = r.rhs - r.lhs;
    }
  }
  return reports;
}

namespace {

struct TrialOutcome {
  std::vector<BoundReport> reports;
  bool monotone = true;
  std::string error;
};

TrialOutcome run_trial(const FuzzOptions& options, std::size_t trial) {
  TrialOutcome out;
  try {
    const FuzzTrialInputs in = generate_trial_inputs(options, trial);
    out.reports = evaluate_trial(in, options);
    // The gated min(|P|,|Q|) form must not exceed either one-sided form, and
    // the sharper covariance bound must not exceed the symmetric one.
    const ObsConstants k = ObsConstants::of(in.obs);
    const double diff = spectral_norm(in.Q - in.P);
    const double gated = gain_continuity_rhs(diff, k, std::min(spectral_norm(in.P), spectral_norm(in.Q)));
    const double one_sided = std::min(gain_continuity_rhs(diff, k, spectral_norm(in.P)),
                                      gain_continuity_rhs(diff, k, spectral_norm(in.Q)));
    out.monotone = gated <= one_sided;
    for (const BoundReport& r : out.reports)
      if (r.sharper_rhs && *r.sharper_rhs > r.rhs) out.monotone = false;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

FuzzSummary fuzz_all_bounds(const FuzzOptions& options) {
  if (options.trials < 1) throw ConfigError("fuzz_all_bounds: trials must be >= 1");
  if (options.n < 1 || options.m < 1) throw ConfigError("fuzz_all_bounds: n and m must be >= 1");

  const auto trials = static_cast<std::ptrdiff_t>(options.trials);
  std::vector<TrialOutcome> outcomes(options.trials);
#pragma omp parallel for schedule(dynamic, 32) num_threads(std::max(1, options.threads))
  for (std::ptrdiff_t t = 0; t < trials; ++t)
    outcomes[static_cast<std::size_t>(t)] = run_trial(options, static_cast<std::size_t>(t));

  FuzzSummary summary;
  summary.options = options;
  for (BoundCheck c : kAllBoundChecks) {
    CheckSummary cs;
    cs.check = c;
    cs.worst_slack = std::numeric_limits<double>::infinity();
    cs.worst_relative_slack = std::numeric_limits<double>::infinity();
    summary.checks.push_back(cs);
  }

  for (std::size_t i = 0; i < options.trials; ++i) {
    const TrialOutcome& outcome = outcomes[i];
    const std::uint64_t trial_seed = derive_seed(options.seed, {i});
    if (!outcome.error.empty()) {
      // Inputs the checks refused count as a failed trial.
      Violation v;
      v.trial = i;
      v.trial_seed = trial_seed;
      v.report.inputs_digest = outcome.error;
      v.report.slack = -std::numeric_limits<double>::infinity();
      summary.violations.push_back(std::move(v));
      continue;
    }
    if (!outcome.monotone) ++summary.monotonicity_failures;
    for (const BoundReport& r : outcome.reports) {
      CheckSummary& cs = summary.checks[static_cast<std::size_t>(r.check)];
      ++cs.evaluated;
      ++summary.reports_total;
      const double rel = r.slack / std::max(1.0, r.scale);
      cs.worst_slack = std::min(cs.worst_slack, r.slack);
      if (rel < cs.worst_relative_slack) {
        cs.worst_relative_slack = rel;
        cs.worst_digest = r.inputs_digest;
      }
      if (r.passes(options.violation_tol)) {
        ++cs.passed;
        ++summary.reports_passed;
      } else {
        summary.violations.push_back({i, trial_seed, r});
      }
      if (r.sharper_rhs &&
          *r.sharper_rhs - r.lhs < -options.violation_tol * std::max(1.0, *r.sharper_rhs))
        ++cs.sharper_violations;
    }
  }
  return summary;
}

}  // namespace ensrf
