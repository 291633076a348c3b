#pragma once

// Reference implementations of the tuning criteria that materialize the full
// N x N output covariance Q = Phi P Phi^T + sigma2 I. They are O(N^3) and kept
// only as independent checks for the n-dimensional fast path; guard rails
// refuse N beyond a small cap so they cannot sneak into production use.

#include <Eigen/Dense>

#include "regkern/criteria.hpp"
#include "regkern/types.hpp"

namespace regkern {

inline constexpr int kDenseReferenceMaxN = 512;

// Y^T Q^{-1} Y + log det Q, computed literally.
double eb_dense(const MatrixXd& P, const Dataset& d, double sigma2);

// ||Y - Phi theta_r||^2 + 2 sigma2 Tr(Phi R^{-1} Phi^T), computed literally.
double surey_dense(const MatrixXd& P, const Dataset& d, double sigma2);

// ||theta_ls - theta_r||^2 + sigma2 (2 Tr(R^{-1}) - Tr(G^{-1})), with
// R = G + sigma2 P^{-1} materialized.
double sureg_dense(const MatrixXd& P, const Dataset& d, double sigma2);

// E||theta_r - theta0||^2 over the noise, via the exact bias/variance split
// with dense Q.
double mseg_dense(const MatrixXd& P, const Dataset& d, double sigma2, const VectorXd& theta0);

// E||Y* - Phi theta_r||^2 for an independent noise copy Y*, via dense Q.
double msey_dense(const MatrixXd& P, const Dataset& d, double sigma2, const VectorXd& theta0);

// E[F_EB] over the noise: theta0^T Phi^T Q^{-1} Phi theta0 + sigma2 Tr(Q^{-1})
// + log det Q, computed literally.
double eeb_dense(const MatrixXd& P, const Dataset& d, double sigma2, const VectorXd& theta0);

double criterion_value_dense(CriterionKind kind, const MatrixXd& P, const Dataset& d,
                             double sigma2, const VectorXd* theta0 = nullptr);

}  // namespace regkern
