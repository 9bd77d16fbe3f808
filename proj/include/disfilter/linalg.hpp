#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace disfilter {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// (M + Mᵀ) / 2.
MatrixXd symmetrize(const MatrixXd& m);

bool is_symmetric(const MatrixXd& m, double tol);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const MatrixXd& sym);

/// Largest |λ| over the eigenvalues of a square matrix.
double spectral_radius(const MatrixXd& m);

/// Largest singular value.
double spectral_norm(const MatrixXd& m);

/// Symmetric PSD square root V·diag(√λ)·Vᵀ. Eigenvalues in [-tol, 0) are
/// clamped to zero; anything below -tol throws ConfigError naming the
/// eigenvalue. Works for singular covariances where Cholesky does not.
MatrixXd psd_sqrt(const MatrixXd& cov, double tol = 1e-10);

/// Solves S·X = rhs for symmetric positive definite S via Cholesky. On
/// factorization failure a jitter of 1e-12·trace(S)/dim is added to the
/// diagonal and the factorization retried once; a second failure throws
/// NumericalError prefixed with `what`.
MatrixXd spd_solve(const MatrixXd& s, const MatrixXd& rhs, std::string_view what);

/// spd_solve against the identity.
MatrixXd spd_inverse(const MatrixXd& s, std::string_view what);

}  // namespace disfilter
