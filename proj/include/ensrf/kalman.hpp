#pragma once

#include <span>
#include <vector>

#include "ensrf/linalg.hpp"

namespace ensrf {

/// Linear observation d = H x + e with e ~ (0, R), R strictly positive definite.
struct ObservationSpec {
  Matrix H;  // m x n
  Matrix R;  // m x m
  Vector d;  // m

  Index obs_dim() const { return H.rows(); }
  Index state_dim() const { return H.cols(); }

  /// Shape consistency against the state dimension plus R >= spd_floor.
  void validate(Index state_dim, const Tolerances& tol = {}) const;
};

/// Affine model x -> M x + b.
struct LinearModelStep {
  Matrix M;
  Vector b;

  void validate(Index state_dim) const;
};

struct GaussianState {
  Vector mean;
  Matrix cov;
};

struct KalmanStep {
  GaussianState forecast;
  GaussianState analysis;
};

/// K(Q) = Q H^T (H Q H^T + R)^{-1}, through a Cholesky solve with the
/// innovation covariance. Throws NotSpdError if H Q H^T + R falls below the
/// SPD floor.
Matrix kalman_gain(const Matrix& Q, const ObservationSpec& obs, const Tolerances& tol = {});

/// B(X, Q) = X + K(Q) (d - H X).
Vector analysis_mean(const Vector& X, const Matrix& Q, const ObservationSpec& obs,
                     const Tolerances& tol = {});

/// A(Q) = Q - K(Q) H Q, symmetrized.
Matrix analysis_cov(const Matrix& Q, const ObservationSpec& obs, const Tolerances& tol = {});

/// Mean M x + b, covariance M P M^T (symmetrized).
GaussianState kf_forecast(const GaussianState& prev, const LinearModelStep& model);

/// Exact Kalman filter. Entry k (zero based) holds time step k + 1. Numerical
/// failures are rethrown with the one-based time step attached.
std::vector<KalmanStep> kf_run(const GaussianState& init, std::span<const LinearModelStep> models,
                               std::span<const ObservationSpec> observations,
                               const Tolerances& tol = {});

}  // namespace ensrf
