#include "ensrf/kalman.hpp"

#include <sstream>
#include <string>

#include "ensrf/errors.hpp"

namespace ensrf {

namespace {

std::string shape(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void check_obs_shapes(const ObservationSpec& obs, Index n, const char* what) {
  const Index m = obs.H.rows();
  if (obs.H.cols() != n || obs.R.rows() != m || obs.R.cols() != m || obs.d.size() != m) {
    std::ostringstream os;
    os << what << ": inconsistent observation shapes (H " << shape(obs.H) << ", R "
       << shape(obs.R) << ", d " << obs.d.size() << ", state dimension " << n << ")";
    throw ShapeError(os.str());
  }
}

void check_square(const Matrix& Q, Index n, const char* what) {
  if (Q.rows() != n || Q.cols() != n)
    throw ShapeError(std::string(what) + ": covariance is " + shape(Q) + ", expected " +
                     std::to_string(n) + "x" + std::to_string(n));
}

}  // namespace

void ObservationSpec::validate(Index n, const Tolerances& tol) const {
  check_obs_shapes(*this, n, "observation");
  require_finite(H, "observation H");
  require_finite(R, "observation R");
  require_finite(d, "observation d");
  if (!is_symmetric(R, tol)) throw InvalidInput("observation R is not symmetric");
  if (R.size() > 0 && min_eigenvalue(R) < tol.spd_floor)
    throw InvalidInput("observation R is not strictly positive definite");
}

void LinearModelStep::validate(Index n) const {
  if (M.rows() != n || M.cols() != n || b.size() != n) {
    throw ShapeError("model step: M is " + shape(M) + ", b has length " + std::to_string(b.size()) +
                     ", state dimension " + std::to_string(n));
  }
  require_finite(M, "model M");
  require_finite(b, "model b");
}

Matrix kalman_gain(const Matrix& Q, const ObservationSpec& obs, const Tolerances& tol) {
  const Index n = obs.state_dim();
  check_square(Q, n, "kalman_gain");
  check_obs_shapes(obs, n, "kalman_gain");
  const Matrix HQ = obs.H * Q;
  const Matrix innovation = symmetrize(HQ * obs.H.transpose() + obs.R);
  if (innovation.size() == 0) return Matrix::Zero(n, 0);
  if (!all_finite(innovation))
    throw NotSpdError("kalman_gain: innovation covariance HQH^T+R has non-finite entries");
  const double lmin = min_eigenvalue(innovation);
  if (!(lmin >= tol.spd_floor)) {
    std::ostringstream os;
    os << "kalman_gain: innovation covariance HQH^T+R is not positive definite (smallest "
          "eigenvalue "
       << lmin << ")";
    throw NotSpdError(os.str());
  }
  // Square-root-free LDL^T; positive definiteness was checked above.
  Eigen::LDLT<Matrix> ldlt(innovation);
  if (ldlt.info() != Eigen::Success)
    throw NotSpdError("kalman_gain: LDL^T factorization of HQH^T+R failed");
  // K^T = S^{-1} H Q since Q and S are symmetric.
  return ldlt.solve(HQ).transpose();
}

Vector analysis_mean(const Vector& X, const Matrix& Q, const ObservationSpec& obs,
                     const Tolerances& tol) {
  if (X.size() != obs.state_dim())
    throw ShapeError("analysis_mean: state has length " + std::to_string(X.size()) +
                     ", H has " + std::to_string(obs.state_dim()) + " columns");
  const Matrix K = kalman_gain(Q, obs, tol);
  return X + K * (obs.d - obs.H * X);
}

Matrix analysis_cov(const Matrix& Q, const ObservationSpec& obs, const Tolerances& tol) {
  const Matrix K = kalman_gain(Q, obs, tol);
  return symmetrize(Q - K * (obs.H * Q));
}

GaussianState kf_forecast(const GaussianState& prev, const LinearModelStep& model) {
  const Index n = prev.mean.size();
  model.validate(n);
  check_square(prev.cov, n, "kf_forecast");
  return {model.M * prev.mean + model.b,
          symmetrize(model.M * prev.cov * model.M.transpose())};
}

std::vector<KalmanStep> kf_run(const GaussianState& init, std::span<const LinearModelStep> models,
                               std::span<const ObservationSpec> observations,
                               const Tolerances& tol) {
  if (models.size() != observations.size()) {
    throw ConfigError("kf_run: " + std::to_string(models.size()) + " model steps but " +
                      std::to_string(observations.size()) + " observations");
  }
  const Index n = init.mean.size();
  require_finite(init.mean, "kf_run initial mean");
  check_square(init.cov, n, "kf_run");
  require_symmetric_psd(init.cov, tol, "kf_run initial covariance");

  std::vector<KalmanStep> out;
  out.reserve(models.size());
  const GaussianState* prev = &init;
  for (std::size_t k = 0; k < models.size(); ++k) {
    try {
      observations[k].validate(n, tol);
      KalmanStep step;
      step.forecast = kf_forecast(*prev, models[k]);
      step.analysis.mean = analysis_mean(step.forecast.mean, step.forecast.cov, observations[k], tol);
      step.analysis.cov = analysis_cov(step.forecast.cov, observations[k], tol);
      out.push_back(std::move(step));
    } catch (NumericalError& e) {
      e.set_step(k + 1);
      throw;
    }
    prev = &out.back().analysis;
  }
  return out;
}

}  // namespace ensrf
