#include "regkern/criteria_dense.hpp"

#include <cmath>

#include "regkern/errors.hpp"
#include "regkern/linalg.hpp"

namespace regkern {

namespace {

struct DenseParts {
    MatrixXd Q;
    Eigen::LDLT<MatrixXd> Q_ldlt;
    double logdet_Q = 0;
};

DenseParts dense_parts(const MatrixXd& P, const Dataset& d, double sigma2) {
    if (d.N > kDenseReferenceMaxN)
        throw DomainError("dense reference path refuses N > " +
                          std::to_string(kDenseReferenceMaxN));
    if (sigma2 <= 0) throw DomainError("sigma2 must be positive");
    if (P.rows() != d.n || P.cols() != d.n)
        throw DimensionError("kernel size does not match model order");
    DenseParts out;
    out.Q = d.phi * symmetric_part(P) * d.phi.transpose();
    out.Q.diagonal().array() += sigma2;
    out.Q = symmetric_part(out.Q);
    out.Q_ldlt.compute(out.Q);
    const auto& dvec = out.Q_ldlt.vectorD();
    if ((dvec.array() <= 0).any())
        throw InvalidKernelError("dense output covariance is not positive definite");
    out.logdet_Q = dvec.array().log().sum();
    return out;
}

VectorXd theta_r_dense(const DenseParts& parts, const MatrixXd& P, const Dataset& d) {
    return symmetric_part(P) * d.phi.transpose() * parts.Q_ldlt.solve(d.y);
}

MatrixXd gram_of(const Dataset& d) { return d.phi.transpose() * d.phi; }

}  // namespace

double eb_dense(const MatrixXd& P, const Dataset& d, double sigma2) {
    const DenseParts parts = dense_parts(P, d, sigma2);
    return d.y.dot(parts.Q_ldlt.solve(d.y)) + parts.logdet_Q;
}

double surey_dense(const MatrixXd& P, const Dataset& d, double sigma2) {
    const DenseParts parts = dense_parts(P, d, sigma2);
    const VectorXd resid = d.y - d.phi * theta_r_dense(parts, P, d);
    // Tr of the hat matrix Phi P Phi^T Q^{-1} = N - sigma2 Tr(Q^{-1}).
    const double hat_trace = d.N - sigma2 * parts.Q_ldlt.solve(MatrixXd::Identity(d.N, d.N)).trace();
    return resid.squaredNorm() + 2.0 * sigma2 * hat_trace;
}

double sureg_dense(const MatrixXd& P, const Dataset& d, double sigma2) {
    const MatrixXd gram = gram_of(d);
    const double cond_g = condition_estimate(gram);
    if (!(cond_g < kConditionLimit))
        throw IllConditionedError("SUREg refused: Gram matrix condition exceeds threshold", cond_g);
    const double cond_p = condition_estimate(symmetric_part(P));
    if (!(cond_p < kConditionLimit))
        throw IllConditionedError("dense SUREg requires an invertible P", cond_p);
    const int n = d.n;
    const MatrixXd Pinv =
        Eigen::LDLT<MatrixXd>(symmetric_part(P)).solve(MatrixXd::Identity(n, n));
    const MatrixXd R = symmetric_part(gram + sigma2 * Pinv);
    Eigen::LDLT<MatrixXd> r_ldlt(R);
    const MatrixXd gram_inv = Eigen::LDLT<MatrixXd>(gram).solve(MatrixXd::Identity(n, n));
    const VectorXd b = d.phi.transpose() * d.y;
    const VectorXd theta_ls = gram_inv * b;
    const VectorXd theta_r = r_ldlt.solve(b);
    const double tr_rinv = r_ldlt.solve(MatrixXd::Identity(n, n)).trace();
    return (theta_ls - theta_r).squaredNorm() + sigma2 * (2.0 * tr_rinv - gram_inv.trace());
}

double mseg_dense(const MatrixXd& P, const Dataset& d, double sigma2, const VectorXd& theta0) {
    const DenseParts parts = dense_parts(P, d, sigma2);
    const MatrixXd Psym = symmetric_part(P);
    // theta_r = K Y with K = P Phi^T Q^{-1}; mean over noise uses Y = Phi theta0 + e.
    const MatrixXd K = Psym * d.phi.transpose() * parts.Q_ldlt.solve(MatrixXd::Identity(d.N, d.N));
    const VectorXd bias = K * (d.phi * theta0) - theta0;
    const double variance = sigma2 * K.squaredNorm();
    return bias.squaredNorm() + variance;
}

double msey_dense(const MatrixXd& P, const Dataset& d, double sigma2, const VectorXd& theta0) {
    const DenseParts parts = dense_parts(P, d, sigma2);
    const MatrixXd Psym = symmetric_part(P);
    const MatrixXd K = Psym * d.phi.transpose() * parts.Q_ldlt.solve(MatrixXd::Identity(d.N, d.N));
    const VectorXd bias = d.phi * (K * (d.phi * theta0) - theta0);
    const double variance = sigma2 * (d.phi * K).squaredNorm();
    return bias.squaredNorm() + variance + d.N * sigma2;
}

double eeb_dense(const MatrixXd& P, const Dataset& d, double sigma2, const VectorXd& theta0) {
    const DenseParts parts = dense_parts(P, d, sigma2);
    const VectorXd m = d.phi * theta0;
    const double tr_qinv = parts.Q_ldlt.solve(MatrixXd::Identity(d.N, d.N)).trace();
    return m.dot(parts.Q_ldlt.solve(m)) + sigma2 * tr_qinv + parts.logdet_Q;
}

double criterion_value_dense(CriterionKind kind, const MatrixXd& P, const Dataset& d,
                             double sigma2, const VectorXd* theta0) {
    if (criterion_is_oracle(kind) && !theta0)
        throw DomainError("criterion " + criterion_tag(kind) + " requires theta0");
    switch (kind) {
        case CriterionKind::EB: return eb_dense(P, d, sigma2);
        case CriterionKind::SUREy: return surey_dense(P, d, sigma2);
        case CriterionKind::SUREg: return sureg_dense(P, d, sigma2);
        case CriterionKind::MSEg: return mseg_dense(P, d, sigma2, *theta0);
        case CriterionKind::MSEy: return msey_dense(P, d, sigma2, *theta0);
        case CriterionKind::EEB: return eeb_dense(P, d, sigma2, *theta0);
    }
    throw ConfigError("unknown criterion kind");
}

}  // namespace regkern
