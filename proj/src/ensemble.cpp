#include "ensrf/ensemble.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "ensrf/errors.hpp"
#include "ensrf/random.hpp"

namespace ensrf {

Ensemble::Ensemble(Matrix members) : members_(std::move(members)) {
  if (members_.cols() < 2)
    throw InvalidInput("ensemble needs at least 2 members, got " + std::to_string(members_.cols()));
  require_finite(members_, "ensemble");
}

Vector ensemble_mean(const Ensemble& e) { return e.members().rowwise().mean(); }

Matrix ensemble_deviations(const Ensemble& e) {
  return e.members().colwise() - ensemble_mean(e);
}

Matrix ensemble_cov(const Ensemble& e) {
  const Matrix dev = ensemble_deviations(e);
  const Index n = e.dim();
  Matrix cov = Matrix::Zero(n, n);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(dev, 1.0 / static_cast<double>(e.size()));
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return clamp_psd(cov);
}

Ensemble sample_initial_ensemble(const FactoredGaussian& g, Index n_members, std::uint64_t seed) {
  if (n_members < 2)
    throw ConfigError("sample_initial_ensemble: N must be >= 2, got " + std::to_string(n_members));
  if (g.factor.rows() != g.mean.size())
    throw ShapeError("sample_initial_ensemble: factor has " + std::to_string(g.factor.rows()) +
                     " rows, mean has length " + std::to_string(g.mean.size()));
  const Index r = g.factor.cols();
  Matrix members(g.mean.size(), n_members);
  for (Index i = 0; i < n_members; ++i) {
    Philox4x32 rng(seed, static_cast<std::uint64_t>(i));
    members.col(i) = g.mean + g.factor * standard_normal(rng, r);
  }
  return Ensemble(std::move(members));
}

Ensemble exact_moment_ensemble(const FactoredGaussian& g, Index copies, const Tolerances& tol) {
  const Index n = g.mean.size();
  if (g.factor.rows() != n || g.factor.cols() != n)
    throw ShapeError("exact_moment_ensemble: factor must be " + std::to_string(n) + "x" +
                     std::to_string(n));
  if (copies < 1) throw ConfigError("exact_moment_ensemble: copies must be >= 1");
  const Matrix root = sym_sqrt(g.covariance(), tol);
  const double scale = std::sqrt(static_cast<double>(n));
  Matrix members(n, 2 * n * copies);
  Index col = 0;
  for (Index c = 0; c < copies; ++c) {
    for (Index j = 0; j < n; ++j) {
      members.col(col++) = g.mean + scale * root.col(j);
      members.col(col++) = g.mean - scale * root.col(j);
    }
  }
  return Ensemble(std::move(members));
}

Ensemble forecast_ensemble(const Ensemble& e, const LinearModelStep& model) {
  model.validate(e.dim());
  Matrix next = model.M * e.members();
  next.colwise() += model.b;
  return Ensemble(std::move(next));
}

namespace {

/// Scaled observation-space deviations S = R^{-1/2} H D / sqrt(N) and the
/// eigendecomposition of S S^T. R^{-1/2} is taken as the inverse Cholesky
/// factor; any square root of R gives the same S^T S.
struct TransformFactors {
  Matrix S;       // m x N
  Matrix W;       // m x m eigenvectors of S S^T
  Vector lambda;  // eigenvalues, clamped >= 0
};

TransformFactors transform_factors(const Matrix& dev, const ObservationSpec& obs,
                                   const Tolerances& tol) {
  const Index n_members = dev.cols();
  Eigen::LLT<Matrix> chol(symmetrize(obs.R));
  if (chol.info() != Eigen::Success)
    throw NotSpdError("etkf: Cholesky factorization of R failed");
  Matrix S = chol.matrixL().solve(obs.H * dev) / std::sqrt(static_cast<double>(n_members));
  if (!S.allFinite()) throw TransformDegeneracy("etkf: non-finite scaled observation deviations");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(S * S.transpose()));
  if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite()) {
    std::ostringstream os;
    os << "etkf: eigendecomposition of the " << S.rows() << "x" << S.rows()
       << " observation-space Gram matrix failed (N=" << n_members << ")";
    throw TransformDegeneracy(os.str());
  }
  Vector lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0);
  if (lambda.size() > 0 && lambda(0) < -tol.psd * scale) {
    std::ostringstream os;
    os << "etkf: observation-space Gram matrix has eigenvalue " << lambda(0)
       << " (N=" << n_members << ", m=" << S.rows() << ")";
    throw TransformDegeneracy(os.str());
  }
  return {std::move(S), eig.eigenvectors(), lambda.cwiseMax(0.0)};
}

/// g(x) = ((1 + x)^{-1/2} - 1) / x, written without cancellation.
Vector shrink_weights(const Vector& lambda) {
  Vector g(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i) {
    const double root = std::sqrt(1.0 + lambda(i));
    g(i) = -1.0 / (root * (1.0 + root));
  }
  return g;
}

}  // namespace

Matrix etkf_transform(const Ensemble& e, const ObservationSpec& obs, const Tolerances& tol) {
  obs.validate(e.dim(), tol);
  const auto f = transform_factors(ensemble_deviations(e), obs, tol);
  const Matrix WS = f.W.transpose() * f.S;
  Matrix T = WS.transpose() * shrink_weights(f.lambda).asDiagonal() * WS;
  T.diagonal().array() += 1.0;
  return symmetrize(T);
}

Ensemble etkf_analysis(const Ensemble& e, const ObservationSpec& obs, const Tolerances& tol) {
  obs.validate(e.dim(), tol);
  const Vector mean = ensemble_mean(e);
  const Matrix dev = e.members().colwise() - mean;
  const Matrix Q = ensemble_cov(e);
  const Vector mean_a = analysis_mean(mean, Q, obs, tol);

  const auto f = transform_factors(dev, obs, tol);
  const Matrix WS = f.W.transpose() * f.S;  // m x N
  Matrix dev_a = dev + (dev * WS.transpose()) * shrink_weights(f.lambda).asDiagonal() * WS;
  dev_a.colwise() -= dev_a.rowwise().mean();
  dev_a.colwise() += mean_a;
  return Ensemble(std::move(dev_a));
}

std::vector<SrfStep> srf_run(const Ensemble& init, std::span<const LinearModelStep> models,
                             std::span<const ObservationSpec> observations,
                             const Tolerances& tol) {
  if (models.size() != observations.size()) {
    throw ConfigError("srf_run: " + std::to_string(models.size()) + " model steps but " +
                      std::to_string(observations.size()) + " observations");
  }
  std::vector<SrfStep> out;
  out.reserve(models.size());
  const Ensemble* prev = &init;
  for (std::size_t k = 0; k < models.size(); ++k) {
    try {
      Ensemble forecast = forecast_ensemble(*prev, models[k]);
      GaussianState fstats{ensemble_mean(forecast), ensemble_cov(forecast)};
      Ensemble analysis = etkf_analysis(forecast, observations[k], tol);
      GaussianState astats{ensemble_mean(analysis), ensemble_cov(analysis)};
      out.push_back(SrfStep{std::move(fstats), std::move(astats), std::move(analysis)});
    } catch (NumericalError& err) {
      err.set_step(k + 1);
      throw;
    }
    prev = &out.back().ensemble;
  }
  return out;
}

}  // namespace ensrf
