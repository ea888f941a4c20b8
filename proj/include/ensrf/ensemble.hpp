#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ensrf/kalman.hpp"
#include "ensrf/linalg.hpp"

namespace ensrf {

/// N >= 2 state vectors of equal length, stored as the columns of an n x N
/// matrix.
class Ensemble {
 public:
  explicit Ensemble(Matrix members);

  Index size() const { return members_.cols(); }
  Index dim() const { return members_.rows(); }
  const Matrix& members() const { return members_; }
  Vector member(Index i) const { return members_.col(i); }

 private:
  Matrix members_;
};

/// Gaussian with covariance B = L L^T held only through its factor L (n x r).
struct FactoredGaussian {
  Vector mean;
  Matrix factor;

  Matrix covariance() const { return symmetrize(factor * factor.transpose()); }
};

/// Arithmetic mean of the members.
Vector ensemble_mean(const Ensemble& e);

/// Members minus the ensemble mean (n x N), rows summing to zero.
Matrix ensemble_deviations(const Ensemble& e);

/// (1/N) sum (X_i - mean)(X_i - mean)^T. Divisor N, not N - 1. The result is
/// exactly symmetric and PSD-clamped.
Matrix ensemble_cov(const Ensemble& e);

/// Members mean + L Y_i with Y_i ~ N(0, I_r). Member i draws from Philox
/// stream i under the given seed, so the ensemble is reproducible regardless of
/// evaluation order.
Ensemble sample_initial_ensemble(const FactoredGaussian& g, Index n_members, std::uint64_t seed);

/// Deterministic ensemble {mean +- sqrt(n) c_j}, c_j the columns of
/// sym_sqrt(L L^T), repeated `copies` times (N = 2 n copies). Its sample mean
/// and divisor-N covariance reproduce the distribution exactly. Needs a square
/// factor.
Ensemble exact_moment_ensemble(const FactoredGaussian& g, Index copies = 1,
                               const Tolerances& tol = {});

/// X_i -> M X_i + b for every member.
Ensemble forecast_ensemble(const Ensemble& e, const LinearModelStep& model);

/// Symmetric ensemble-space transform T = (I + S^T S)^{-1/2},
/// S = R^{-1/2} H D / sqrt(N), D the forecast deviations. Materializes the full
/// N x N matrix; intended for diagnostics and small N.
Matrix etkf_transform(const Ensemble& e, const ObservationSpec& obs, const Tolerances& tol = {});

/// Square-root analysis: members mean_a + D T with mean_a = B(mean, Q_N) and T
/// as in etkf_transform. T is applied in its rank-m form
/// T = I + S^T W g(Lambda) W^T S, where S S^T = W Lambda W^T, so the cost is
/// O(n N m + N m^2). The resulting ensemble has mean B(mean, Q_N) and
/// covariance A(Q_N).
Ensemble etkf_analysis(const Ensemble& e, const ObservationSpec& obs, const Tolerances& tol = {});

struct SrfStep {
  GaussianState forecast;  // ensemble statistics of the forecast ensemble
  GaussianState analysis;  // ensemble statistics of the analysis ensemble
  Ensemble ensemble;       // analysis ensemble
};

/// Unbiased square-root ensemble filter. Entry k holds time step k + 1.
std::vector<SrfStep> srf_run(const Ensemble& init, std::span<const LinearModelStep> models,
                             std::span<const ObservationSpec> observations,
                             const Tolerances& tol = {});

}  // namespace ensrf
