#pragma once

#include <Eigen/Dense>

namespace regkern {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Condition threshold beyond which normal-equation style solves are refused.
inline constexpr double kConditionLimit = 1e12;

/// Symmetric part (M + M^T)/2.
MatrixXd symmetric_part(const MatrixXd& m);

/// True when ||M - M^T||_inf <= tol * (1 + ||M||_inf).
bool is_symmetric(const MatrixXd& m, double tol = 1e-12);

/// True when every entry is finite.
bool all_finite(const MatrixXd& m);

/// Condition estimate (1/rcond) of a symmetric positive semidefinite matrix,
/// from an LDLT factorization. Returns +inf for singular input.
double condition_estimate(const MatrixXd& sym);

/// log det of a square matrix via partial-pivot LU. `positive` is set to false
/// when the determinant is not strictly positive (the returned value is then
/// log|det|).
double logdet_lu(const MatrixXd& m, bool* positive = nullptr);

/// log det of a symmetric positive definite matrix via Cholesky; throws
/// InvalidKernelError if the factorization fails.
double logdet_spd(const MatrixXd& sym);

/// A factor C with C*C^T = G for symmetric positive semidefinite G. Uses
/// Cholesky when G is definite and an eigenvalue square root otherwise
/// (negative eigenvalues within -tol are clipped to zero; beyond that throws).
MatrixXd psd_factor(const MatrixXd& sym, double tol = 1e-10);

/// Inverse of a symmetric positive definite matrix via LDLT.
MatrixXd spd_inverse(const MatrixXd& sym);

}  // namespace regkern
