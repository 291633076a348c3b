#pragma once

#include "regkern/types.hpp"

namespace regkern {

/// Build the N x n regressor matrix of an FIR model. Row t (1-based) is
/// [u(t-1), ..., u(t-n)], where u is supplied as samples u(0)..u(N-1) and
/// u(t) = 0 for t < 0 (zero initial conditions).
MatrixXd build_regressor(const VectorXd& u, int n, int N);

/// Assemble a Dataset from input and output samples. With burn_in the first n
/// rows (the ones touched by zero-padding) are dropped, so N becomes
/// u.size() - n and every retained regressor row is fully populated.
Dataset make_dataset(const VectorXd& u, const VectorXd& y, int n, bool burn_in = false);

/// Least-squares estimate (normal equations). Throws IllConditionedError when
/// the condition estimate of Phi^T Phi exceeds kConditionLimit.
VectorXd ls_estimate(const Dataset& d);

/// Regularized least-squares estimate P Phi^T (Phi P Phi^T + sigma2 I)^{-1} Y,
/// evaluated through the equivalent n-dimensional solve
/// (P Phi^T Phi + sigma2 I) theta = P Phi^T Y, which is exact for singular P.
VectorXd rls_estimate(const Dataset& d, const MatrixXd& P, double sigma2);

/// Exact mean squared error of the RLS impulse-response estimate:
/// ||P Phi^T Q^{-1} Phi theta0 - theta0||^2 + sigma2 Tr(P Phi^T Q^{-1} Q^{-T} Phi P^T),
/// with Q = Phi P Phi^T + sigma2 I, computed without materializing Q.
double mseg_exact(const MatrixXd& P, const MatrixXd& phi, const VectorXd& theta0, double sigma2);

/// Exact mean squared error of the one-step output prediction; satisfies
/// msey = Tr(M Phi^T Phi) + N sigma2 with M the parameter MSE matrix.
double msey_exact(const MatrixXd& P, const MatrixXd& phi, const VectorXd& theta0, double sigma2);

/// Goodness of fit 100 (1 - ||theta_hat - theta0|| / ||theta0 - mean(theta0) 1||).
/// Throws UndefinedFitError for constant theta0.
double fit_metric(const VectorXd& theta_hat, const VectorXd& theta0);

/// MSE curves along the regularization path P^{-1} = beta A / sigma2.
struct GainCurve {
    VectorXd beta;     ///< evaluation grid
    VectorXd mseg;     ///< parameter MSE at each beta
    VectorXd msey;     ///< prediction MSE at each beta
    double mseg_ls;    ///< beta -> 0 limit, sigma2 Tr((Phi^T Phi)^{-1})
    double msey_ls;    ///< beta -> 0 limit of the prediction MSE
};

/// Evaluate the MSE curves over a positive beta grid for a positive definite
/// penalty shape A. Rejects non-positive beta entries.
GainCurve regularization_gain_curve(const MatrixXd& A, const VectorXd& beta_grid,
                                    const MatrixXd& phi, const VectorXd& theta0, double sigma2);

/// Residual-based noise variance estimate ||Y - Phi theta_ls||^2 / (N - n).
double sigma2_estimate(const Dataset& d);

}  // namespace regkern
