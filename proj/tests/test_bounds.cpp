#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ensrf/bounds.hpp"
#include "ensrf/errors.hpp"
#include "test_support.hpp"

using namespace ensrf;
using ensrf::testing::scalar_obs;

namespace {

Matrix s(double x) { return Matrix::Constant(1, 1, x); }
Vector v(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST(BoundNames, RoundTrip) {
  for (BoundCheck c : kAllBoundChecks) EXPECT_EQ(bound_check_from_string(to_string(c)), c);
  EXPECT_EQ(bound_check_from_string("lp_cauchy_schwarz"), BoundCheck::LpCauchySchwarz);
  EXPECT_FALSE(bound_check_from_string("nope"));
}

TEST(ObsConstants, Product) {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 10; ++t) {
    const auto obs = ensrf::testing::random_obs(gen, 3, 2);
    const ObsConstants k = ObsConstants::of(obs);
    EXPECT_GE(k.h_norm, 0.0);
    EXPECT_GE(k.r_inv_norm, 0.0);
    EXPECT_NEAR(k.c, k.h_norm * k.h_norm * k.r_inv_norm, 1e-12 * k.c);
  }
  const ObsConstants k = ObsConstants::of(scalar_obs(3, 2, 0));
  EXPECT_DOUBLE_EQ(k.c, 4.5);
}

TEST(GainContinuity, Examples) {
  const auto obs = scalar_obs(1, 1, 0);
  const BoundReport same = check_gain_continuity(s(2), s(2), obs);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
  const BoundReport r = check_gain_continuity(s(0), s(1), obs);
  EXPECT_DOUBLE_EQ(r.lhs, 0.5);
  EXPECT_DOUBLE_EQ(r.rhs, 1.0);
  EXPECT_TRUE(r.passes(1e-10));
}

TEST(GainNorm, Examples) {
  const auto obs = scalar_obs(1, 1, 0);
  const BoundReport zero = check_gain_norm(s(0), obs);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_EQ(zero.rhs, 0.0);
  const BoundReport r = check_gain_norm(s(1), obs);
  EXPECT_DOUBLE_EQ(r.lhs, 0.5);
  EXPECT_DOUBLE_EQ(r.rhs, 1.0);
}

TEST(BMeanNorm, Examples) {
  Vector x(3);
  x << 1, -2, 2;
  std::mt19937_64 gen(1);
  const auto obs = ensrf::testing::random_obs(gen, 3, 2);
  const BoundReport zero = check_bmean_norm(x, Matrix::Zero(3, 3), obs);
  EXPECT_DOUBLE_EQ(zero.lhs, 3.0);
  EXPECT_DOUBLE_EQ(zero.rhs, 3.0);
  const BoundReport r = check_bmean_norm(v(0), s(1), scalar_obs(1, 1, 2));
  EXPECT_DOUBLE_EQ(r.lhs, 1.0);
  EXPECT_DOUBLE_EQ(r.rhs, 2.0);
}

TEST(ACovContinuity, Examples) {
  const auto obs = scalar_obs(1, 1, 0);
  const BoundReport same = check_acov_continuity(s(3), s(3), obs);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
  const BoundReport r = check_acov_continuity(s(0), s(1), obs);
  EXPECT_DOUBLE_EQ(r.lhs, 0.5);
  EXPECT_DOUBLE_EQ(r.rhs, 2.0);
  ASSERT_TRUE(r.sharper_rhs);
  EXPECT_DOUBLE_EQ(*r.sharper_rhs, 2.0);
}

TEST(LoewnerSandwich, Examples) {
  const auto obs = scalar_obs(1, 1, 0);
  const auto [lo0, up0] = check_loewner_sandwich(s(0), obs);
  EXPECT_EQ(lo0.rhs, 0.0);
  EXPECT_EQ(up0.rhs, 0.0);
  const auto [lo, up] = check_loewner_sandwich(s(1), obs);
  EXPECT_DOUBLE_EQ(lo.slack, 0.5);
  EXPECT_DOUBLE_EQ(up.slack, 0.5);
}

TEST(BMeanContinuity, Examples) {
  const auto obs = scalar_obs(1, 1, 2);
  const BoundReport same = check_bmean_continuity(v(1), s(1), v(1), s(1), obs);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
  const BoundReport r = check_bmean_continuity(v(0), s(1), v(0), s(0), obs);
  EXPECT_DOUBLE_EQ(r.lhs, 1.0);
  EXPECT_DOUBLE_EQ(r.rhs, 2.0);
  EXPECT_THROW(check_bmean_continuity(v(0), s(1), Vector::Zero(2), s(0), obs), ShapeError);
}

TEST(BoundChecks, RejectIndefiniteInputs) {
  EXPECT_THROW(check_gain_norm(s(-1), scalar_obs(1, 1, 0)), NotPsdError);
}

TEST(Fuzz, TrialIsDeterministic) {
  FuzzOptions opt;
  opt.trials = 1;
  opt.seed = 77;
  const FuzzSummary a = fuzz_all_bounds(opt);
  const FuzzSummary b = fuzz_all_bounds(opt);
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    EXPECT_EQ(a.checks[i].worst_slack, b.checks[i].worst_slack);
    EXPECT_EQ(a.checks[i].worst_digest, b.checks[i].worst_digest);
  }
  EXPECT_TRUE(a.ok());
  EXPECT_EQ(a.reports_total, kAllBoundChecks.size());
}

TEST(Fuzz, ThreadCountDoesNotChangeResults) {
  FuzzOptions opt;
  opt.trials = 300;
  opt.seed = 5;
  const FuzzSummary one = fuzz_all_bounds(opt);
  opt.threads = 3;
  const FuzzSummary three = fuzz_all_bounds(opt);
  for (std::size_t i = 0; i < one.checks.size(); ++i) {
    EXPECT_EQ(one.checks[i].worst_slack, three.checks[i].worst_slack);
    EXPECT_EQ(one.checks[i].passed, three.checks[i].passed);
  }
  EXPECT_TRUE(one.ok());
}

TEST(Fuzz, CorruptedCheckIsReportedWithSeed) {
  FuzzOptions opt;
  opt.trials = 20;
  opt.seed = 3;
  opt.corrupt = BoundCheck::CovContinuity;
  const FuzzSummary sum = fuzz_all_bounds(opt);
  EXPECT_FALSE(sum.ok());
  ASSERT_EQ(sum.violations.size(), 20u);
  for (const Violation& viol : sum.violations) {
    EXPECT_EQ(viol.report.check, BoundCheck::CovContinuity);
    EXPECT_EQ(viol.trial_seed, derive_seed(3, {viol.trial}));
    EXPECT_NE(viol.report.inputs_digest.find("seed="), std::string::npos);
  }
}

TEST(Fuzz, RejectsEmptyCampaign) {
  FuzzOptions opt;
  opt.trials = 0;
  EXPECT_THROW(fuzz_all_bounds(opt), ConfigError);
}

TEST(Fuzz, ModerateCampaignHasNoViolations) {
  FuzzOptions opt;
  opt.trials = 2000;
  opt.seed = 11;
  const FuzzSummary sum = fuzz_all_bounds(opt);
  EXPECT_TRUE(sum.ok()) << sum.violations.size() << " violations";
  EXPECT_EQ(sum.reports_passed, sum.reports_total);
}

// Scalar closed forms: K(q) = q h / (h^2 q + r), A(q) = q r / (h^2 q + r).
TEST(Fuzz, ScalarWorstSlackMatchesClosedForm) {
  FuzzOptions opt;
  opt.n = 1;
  opt.m = 1;
  opt.trials = 100;
  opt.seed = 2718;
  const FuzzSummary sum = fuzz_all_bounds(opt);
  ASSERT_TRUE(sum.ok());

  std::vector<double> worst(kAllBoundChecks.size(), std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < opt.trials; ++t) {
    const FuzzTrialInputs in = generate_trial_inputs(opt, t);
    const double q = in.Q(0, 0), p = in.P(0, 0), h = in.obs.H(0, 0), r = in.obs.R(0, 0);
    const double d = in.obs.d(0), x = in.X(0), y = in.Y(0);
    const double ah = std::abs(h), ri = 1.0 / r, c = h * h * ri;
    auto K = [&](double z) { return z * h / (h * h * z + r); };
    auto A = [&](double z) { return z * r / (h * h * z + r); };
    auto B = [&](double xx, double z) { return xx + K(z) * (d - h * xx); };
    const double dq = std::abs(q - p);
    const double slacks[] = {
        dq * ah * ri * (1 + std::min(p, q) * c) - std::abs(K(q) - K(p)),
        q * ah * ri - std::abs(K(q)),
        std::abs(x) + q * ah * ri * std::abs(d - h * x) - std::abs(B(x, q)),
        dq * (1 + c * q + c * p + c * c * p * q) - std::abs(A(q) - A(p)),
        A(q),
        q - A(q),
        std::abs(x - y) * (1 + c * q) + dq * ah * ri * (1 + c * p) * std::abs(d - h * y) -
            std::abs(B(x, q) - B(y, p)),
    };
    for (std::size_t i = 0; i < worst.size(); ++i) worst[i] = std::min(worst[i], slacks[i]);
  }
  for (std::size_t i = 0; i < worst.size(); ++i)
    EXPECT_NEAR(sum.checks[i].worst_slack, worst[i], 1e-9 * std::max(1.0, std::abs(worst[i])))
        << to_string(kAllBoundChecks[i]);
}

TEST(RandomPsd, IsPsdAndBoundedCondition) {
  Philox4x32 rng(9, 0);
  for (int t = 0; t < 50; ++t) {
    const Matrix a = random_psd(5, rng, 1e6);
    EXPECT_TRUE(is_symmetric(a));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const double top = eig.eigenvalues().maxCoeff();
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12 * top);
  }
  const Matrix spd = random_spd(4, rng, 0.1);
  EXPECT_GE(min_eigenvalue(spd), 0.1 - 1e-12);
}

class LpCauchySchwarz : public ::testing::TestWithParam<double> {};

TEST_P(LpCauchySchwarz, HoldsWithinStatisticalTolerance) {
  const double p = GetParam();
  std::mt19937_64 gen(static_cast<std::uint64_t>(100 * p));
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(0.5);
  std::vector<double> u(20000), w(20000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = normal(gen);
    w[i] = 0.3 * u[i] + expo(gen);  // correlated with u
  }
  const BoundReport r = check_lp_cauchy_schwarz(u, w, p);
  EXPECT_EQ(r.check, BoundCheck::LpCauchySchwarz);
  EXPECT_LE(r.lhs, r.rhs * 1.05);
}

INSTANTIATE_TEST_SUITE_P(Orders, LpCauchySchwarz, ::testing::Values(1.0, 2.0, 4.0));
