#pragma once

#include <Eigen/Dense>

namespace ensrf {

using Index = Eigen::Index;
/// Element of the state (or data) space, a column vector.
using Vector = Eigen::VectorXd;
/// Dense operator. Covariances are Matrix values that satisfy the symmetric
/// PSD invariants checked by require_symmetric_psd.
using Matrix = Eigen::MatrixXd;

/// Round-off headroom used by every check in the library. All thresholds are
/// relative to the operator norm of the input unless stated otherwise.
struct Tolerances {
  double sym = 1e-10;
  double psd = 1e-8;
  double sqrt = 1e-8;
  double inv = 1e-10;
  double spd_floor = 1e-12;
};

/// Largest singular value. Zero for empty matrices.
double spectral_norm(const Matrix& a);

/// Root sum of squares of all entries.
double hs_norm(const Matrix& a);

/// u v^T.
Matrix tensor(const Vector& u, const Vector& v);

/// (A + A^T) / 2, exactly symmetric in floating point.
Matrix symmetrize(const Matrix& a);

bool all_finite(const Matrix& a);
void require_finite(const Matrix& a, const char* what);

/// max |A_ij - A_ji| <= sym * |A|.
bool is_symmetric(const Matrix& a, const Tolerances& tol = {});

/// Smallest eigenvalue of the symmetric part of a.
double min_eigenvalue(const Matrix& a);

/// Throws InvalidInput for non-finite, non-square or asymmetric input, and
/// NotPsdError when the smallest eigenvalue is below -psd * |A|.
void require_symmetric_psd(const Matrix& a, const Tolerances& tol, const char* what);

/// Returns a with negative eigenvalues replaced by zero. Input that is already
/// PSD is returned untouched (no eigen-reconstruction round-off).
Matrix clamp_psd(const Matrix& a);

/// Unique symmetric PSD square root, via a full symmetric eigendecomposition.
/// Eigenvalues in [-psd*|A|, 0) are clamped to zero.
Matrix sym_sqrt(const Matrix& a, const Tolerances& tol = {});

/// lambda_min(b - a), the Loewner slack of a <= b.
double loewner_slack(const Matrix& a, const Matrix& b, const Tolerances& tol = {});

/// a <= b in the Loewner order, i.e. b - a is PSD up to
/// psd * max(1, |a|, |b|).
bool loewner_leq(const Matrix& a, const Matrix& b, const Tolerances& tol = {});

/// Inverse of a symmetric positive definite matrix, symmetrized. Throws
/// NotSpdError when the smallest eigenvalue is below spd_floor.
Matrix spd_inverse(const Matrix& a, const Tolerances& tol = {});

}  // namespace ensrf
