#include "ensrf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "ensrf/errors.hpp"

namespace ensrf {

namespace {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << what << ": expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw ShapeError(os.str());
  }
}

Eigen::SelfAdjointEigenSolver<Matrix> eigen_of(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(a));
}

}  // namespace

double spectral_norm(const Matrix& a) {
  require_finite(a, "spectral_norm");
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double hs_norm(const Matrix& a) {
  require_finite(a, "hs_norm");
  return a.norm();
}

Matrix tensor(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw ShapeError("tensor: vectors of length " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()));
  }
  return u * v.transpose();
}

Matrix symmetrize(const Matrix& a) {
  Matrix s = 0.5 * (a + a.transpose());
  // Force bitwise symmetry: the two halves can round differently.
  for (Index j = 0; j < s.cols(); ++j)
    for (Index i = j + 1; i < s.rows(); ++i) s(j, i) = s(i, j);
  return s;
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

bool is_symmetric(const Matrix& a, const Tolerances& tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  return asym <= tol.sym * spectral_norm(a);
}

double min_eigenvalue(const Matrix& a) {
  require_square(a, "min_eigenvalue");
  if (a.size() == 0) return 0.0;
  return eigen_of(a).eigenvalues()(0);
}

void require_symmetric_psd(const Matrix& a, const Tolerances& tol, const char* what) {
  require_finite(a, what);
  require_square(a, what);
  if (!is_symmetric(a, tol)) throw InvalidInput(std::string(what) + ": matrix is not symmetric");
  if (a.size() == 0) return;
  const double lmin = min_eigenvalue(a);
  const double norm = spectral_norm(a);
  if (lmin < -tol.psd * norm) {
    std::ostringstream os;
    os << what << ": not positive semidefinite (smallest eigenvalue " << lmin << ", norm " << norm
       << ")";
    throw NotPsdError(os.str());
  }
}

Matrix clamp_psd(const Matrix& a) {
  if (a.size() == 0) return a;
  auto eig = eigen_of(a);
  if (eig.eigenvalues()(0) >= 0.0) return a;
  const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
  return symmetrize(eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose());
}

Matrix sym_sqrt(const Matrix& a, const Tolerances& tol) {
  require_finite(a, "sym_sqrt");
  require_square(a, "sym_sqrt");
  if (!is_symmetric(a, tol)) throw InvalidInput("sym_sqrt: matrix is not symmetric");
  if (a.size() == 0) return a;
  auto eig = eigen_of(a);
  const Vector& lambda = eig.eigenvalues();
  const double norm = std::max(std::abs(lambda(0)), std::abs(lambda(lambda.size() - 1)));
  if (lambda(0) < -tol.psd * norm) {
    std::ostringstream os;
    os << "sym_sqrt: not positive semidefinite (smallest eigenvalue " << lambda(0) << ")";
    throw NotPsdError(os.str());
  }
  const Vector root = lambda.cwiseMax(0.0).cwiseSqrt();
  return symmetrize(eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose());
}

double loewner_slack(const Matrix& a, const Matrix& b, const Tolerances& tol) {
  require_finite(a, "loewner_slack");
  require_finite(b, "loewner_slack");
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("loewner_slack: shape mismatch");
  if (!is_symmetric(a, tol) || !is_symmetric(b, tol))
    throw InvalidInput("loewner_slack: operands must be symmetric");
  return min_eigenvalue(b - a);
}

bool loewner_leq(const Matrix& a, const Matrix& b, const Tolerances& tol) {
  const double slack = loewner_slack(a, b, tol);
  const double scale = std::max({1.0, spectral_norm(a), spectral_norm(b)});
  return slack >= -tol.psd * scale;
}

Matrix spd_inverse(const Matrix& a, const Tolerances& tol) {
  require_finite(a, "spd_inverse");
  require_square(a, "spd_inverse");
  if (!is_symmetric(a, tol)) throw InvalidInput("spd_inverse: matrix is not symmetric");
  if (a.size() == 0) return a;
  const double lmin = min_eigenvalue(a);
  if (lmin < tol.spd_floor) {
    std::ostringstream os;
    os << "spd_inverse: not positive definite (smallest eigenvalue " << lmin << ")";
    throw NotSpdError(os.str());
  }
  Eigen::LLT<Matrix> llt(symmetrize(a));
  return symmetrize(llt.solve(Matrix::Identity(a.rows(), a.cols())));
}

}  // namespace ensrf
