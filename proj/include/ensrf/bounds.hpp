#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ensrf/kalman.hpp"
#include "ensrf/linalg.hpp"
#include "ensrf/random.hpp"

namespace ensrf {

enum class BoundCheck {
  GainContinuity,   // |K(Q) - K(P)|
  GainNorm,         // |K(Q)|
  MeanNorm,         // |B(X, Q)|
  CovContinuity,    // |A(Q) - A(P)|
  LoewnerLower,     // 0 <= A(Q)
  LoewnerUpper,     // A(Q) <= Q
  MeanContinuity,   // |B(X, Q) - B(Y, P)|
  LpCauchySchwarz,  // || |U||V| ||_p, statistical; not part of the fuzz campaign
};

inline constexpr std::array<BoundCheck, 7> kAllBoundChecks = {
    BoundCheck::GainContinuity, BoundCheck::GainNorm,     BoundCheck::MeanNorm,
    BoundCheck::CovContinuity,  BoundCheck::LoewnerLower, BoundCheck::LoewnerUpper,
    BoundCheck::MeanContinuity};

std::string_view to_string(BoundCheck check);
std::optional<BoundCheck> bound_check_from_string(std::string_view name);

/// One evaluated inequality lhs <= rhs.
struct BoundReport {
  BoundCheck check{};
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  /// Magnitude the violation tolerance is relative to: rhs for the norm
  /// inequalities, |Q| for the Loewner checks (whose rhs is an eigenvalue).
  double scale = 0.0;
  std::string inputs_digest;
  /// Sharper, asymmetric variant of the covariance continuity bound (with
  /// min{|P|^2, |P||Q|, |Q|^2}); reported only, never gated on.
  std::optional<double> sharper_rhs;

  bool passes(double violation_tol) const;
};

/// c = |H|^2 |R^{-1}| with its factors.
struct ObsConstants {
  double c = 0.0;
  double h_norm = 0.0;
  double r_inv_norm = 0.0;

  static ObsConstants of(const ObservationSpec& obs, const Tolerances& tol = {});
};

BoundReport check_gain_continuity(const Matrix& P, const Matrix& Q, const ObservationSpec& obs,
                                  const Tolerances& tol = {});
BoundReport check_gain_norm(const Matrix& Q, const ObservationSpec& obs,
                            const Tolerances& tol = {});
BoundReport check_bmean_norm(const Vector& X, const Matrix& Q, const ObservationSpec& obs,
                             const Tolerances& tol = {});
BoundReport check_acov_continuity(const Matrix& P, const Matrix& Q, const ObservationSpec& obs,
                                  const Tolerances& tol = {});
/// (0 <= A(Q), A(Q) <= Q) as smallest-eigenvalue slacks.
std::pair<BoundReport, BoundReport> check_loewner_sandwich(const Matrix& Q,
                                                           const ObservationSpec& obs,
                                                           const Tolerances& tol = {});
BoundReport check_bmean_continuity(const Vector& X, const Matrix& Q, const Vector& Y,
                                   const Matrix& P, const ObservationSpec& obs,
                                   const Tolerances& tol = {});

/// Gain continuity right-hand side with an explicit choice of the norm in the
/// second factor; the gated form uses min(|P|, |Q|).
double gain_continuity_rhs(double diff_norm, const ObsConstants& k, double weight_norm);

/// Empirical Lp Cauchy-Schwarz: lhs = ||(|U||V|)||_p, rhs = ||U||_2p ||V||_2p
/// with all norms estimated from the paired samples.
BoundReport check_lp_cauchy_schwarz(std::span<const double> u, std::span<const double> v,
                                    double p);

/// Randomized PSD matrix: Wishart G G^T / n, optionally with its spectrum
/// rescaled to a random condition number up to max_condition (and sometimes
/// rank deficient).
Matrix random_psd(Index n, Philox4x32& rng, double max_condition);
/// Wishart plus ridge, strictly positive definite.
Matrix random_spd(Index n, Philox4x32& rng, double ridge);

struct FuzzOptions {
  Index n = 5;
  Index m = 5;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  double violation_tol = 1e-10;
  double max_condition = 1e6;
  int threads = 1;
  /// Test hook: forces every report of this check to fail.
  std::optional<BoundCheck> corrupt;
};

/// Inputs of one fuzz trial, regenerable from (options, trial index).
struct FuzzTrialInputs {
  std::size_t trial = 0;
  std::uint64_t trial_seed = 0;
  Matrix P, Q;
  Vector X, Y;
  ObservationSpec obs;
};

FuzzTrialInputs generate_trial_inputs(const FuzzOptions& options, std::size_t trial);

/// Every check on one trial's inputs, in kAllBoundChecks order.
std::vector<BoundReport> evaluate_trial(const FuzzTrialInputs& inputs, const FuzzOptions& options);

struct CheckSummary {
  BoundCheck check{};
  std::size_t evaluated = 0;
  std::size_t passed = 0;
  double worst_slack = 0.0;           // min over trials of rhs - lhs
  double worst_relative_slack = 0.0;  // min of slack / max(1, scale)
  std::string worst_digest;
  std::size_t sharper_violations = 0;  // informational
};

struct Violation {
  std::size_t trial = 0;
  std::uint64_t trial_seed = 0;
  BoundReport report;
};

struct FuzzSummary {
  FuzzOptions options;
  std::vector<CheckSummary> checks;  // kAllBoundChecks order
  std::vector<Violation> violations;
  /// Trials where the min-form gain bound exceeded a one-sided form, or the
  /// sharper covariance bound exceeded the symmetric one.
  std::size_t monotonicity_failures = 0;
  std::size_t reports_passed = 0;
  std::size_t reports_total = 0;

  bool ok() const { return violations.empty() && monotonicity_failures == 0; }
};

/// Runs every check on `trials` independently randomized inputs. Failures are
/// collected with their trial seeds, never thrown. Results do not depend on the
/// thread count.
FuzzSummary fuzz_all_bounds(const FuzzOptions& options);

}  // namespace ensrf
