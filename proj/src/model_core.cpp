#include "regkern/model_core.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "regkern/errors.hpp"
#include "regkern/linalg.hpp"

namespace regkern {

namespace {

void check_psd_kernel(const MatrixXd& P) {
    if (P.rows() != P.cols()) throw DimensionError("kernel matrix must be square");
    if (!all_finite(P)) throw InvalidKernelError("kernel matrix has non-finite entries");
    if (!is_symmetric(P, 1e-10)) throw InvalidKernelError("kernel matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetric_part(P), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        throw InvalidKernelError("kernel matrix is not positive semidefinite");
}

}  // namespace

MatrixXd build_regressor(const VectorXd& u, int n, int N) {
    if (n < 1 || N < n) throw DimensionError("build_regressor requires N >= n >= 1");
    if (u.size() < N) throw DimensionError("build_regressor requires at least N input samples");
    MatrixXd phi = MatrixXd::Zero(N, n);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < n; ++j)
            if (i - j >= 0) phi(i, j) = u(i - j);
    return phi;
}

Dataset make_dataset(const VectorXd& u, const VectorXd& y, int n, bool burn_in) {
    if (u.size() != y.size()) throw DimensionError("input and output lengths differ");
    const int total = static_cast<int>(u.size());
    if (!u.allFinite() || !y.allFinite()) throw DomainError("dataset contains non-finite samples");
    Dataset d;
    d.u = u;
    d.n = n;
    if (burn_in) {
        if (total <= n) throw DimensionError("burn-in requires more than n samples");
        d.N = total - n;
        d.phi = build_regressor(u, n, total).bottomRows(d.N);
        d.y = y.tail(d.N);
    } else {
        d.N = total;
        if (d.N < n) throw DimensionError("dataset requires N >= n");
        d.phi = build_regressor(u, n, d.N);
        d.y = y;
    }
    return d;
}

VectorXd ls_estimate(const Dataset& d) {
    const MatrixXd gram = d.phi.transpose() * d.phi;
    const double cond = condition_estimate(gram);
    if (!(cond < kConditionLimit))
        throw IllConditionedError("normal equations are too ill-conditioned for LS", cond);
    Eigen::LDLT<MatrixXd> ldlt(gram);
    const VectorXd b = d.phi.transpose() * d.y;
    return ldlt.solve(b);
}

VectorXd rls_estimate(const Dataset& d, const MatrixXd& P, double sigma2) {
    if (sigma2 <= 0) throw DomainError("sigma2 must be positive");
    if (P.rows() != d.n) throw DimensionError("kernel size does not match model order");
    check_psd_kernel(P);
    const MatrixXd Psym = symmetric_part(P);
    const MatrixXd gram = d.phi.transpose() * d.phi;
    const MatrixXd H = Psym * gram + sigma2 * MatrixXd::Identity(d.n, d.n);
    const VectorXd rhs = Psym * (d.phi.transpose() * d.y);
    return Eigen::PartialPivLU<MatrixXd>(H).solve(rhs);
}

double mseg_exact(const MatrixXd& P, const MatrixXd& phi, const VectorXd& theta0, double sigma2) {
    if (sigma2 <= 0) throw DomainError("sigma2 must be positive");
    const int n = static_cast<int>(phi.cols());
    if (P.rows() != n || theta0.size() != n) throw DimensionError("mseg_exact dimension mismatch");
    check_psd_kernel(P);
    const MatrixXd Psym = symmetric_part(P);
    const MatrixXd gram = phi.transpose() * phi;
    const MatrixXd H = Psym * gram + sigma2 * MatrixXd::Identity(n, n);
    Eigen::PartialPivLU<MatrixXd> lu(H);
    // Bias: P Phi^T Q^{-1} Phi theta0 - theta0 = -sigma2 H^{-1} theta0.
    const VectorXd bias_vec = lu.solve(theta0);
    const double bias = sigma2 * sigma2 * bias_vec.squaredNorm();
    // Variance: sigma2 ||P Hbar^{-1} C||_F^2 with C C^T = Phi^T Phi and
    // Hbar^{-1} = H^{-T} for symmetric P.
    const MatrixXd C = psd_factor(gram);
    const MatrixXd X = lu.transpose().solve(C);
    const double variance = sigma2 * (Psym * X).squaredNorm();
    return bias + variance;
}

double msey_exact(const MatrixXd& P, const MatrixXd& phi, const VectorXd& theta0, double sigma2) {
    if (sigma2 <= 0) throw DomainError("sigma2 must be positive");
    const int n = static_cast<int>(phi.cols());
    const int N = static_cast<int>(phi.rows());
    if (P.rows() != n || theta0.size() != n) throw DimensionError("msey_exact dimension mismatch");
    check_psd_kernel(P);
    const MatrixXd Psym = symmetric_part(P);
    const MatrixXd gram = phi.transpose() * phi;
    const MatrixXd H = Psym * gram + sigma2 * MatrixXd::Identity(n, n);
    Eigen::PartialPivLU<MatrixXd> lu(H);
    const MatrixXd C = psd_factor(gram);
    const VectorXd bias_vec = lu.solve(theta0);
    const double bias = sigma2 * sigma2 * (C.transpose() * bias_vec).squaredNorm();
    const MatrixXd X = lu.transpose().solve(C);
    const double variance = sigma2 * (C.transpose() * (Psym * X)).squaredNorm();
    return bias + N * sigma2 + variance;
}

double fit_metric(const VectorXd& theta_hat, const VectorXd& theta0) {
    if (theta_hat.size() != theta0.size()) throw DimensionError("fit_metric length mismatch");
    const double mean = theta0.mean();
    const double denom = (theta0.array() - mean).matrix().norm();
    const double scale = 1.0 + theta0.cwiseAbs().maxCoeff();
    if (denom <= 1e-14 * scale)
        throw UndefinedFitError("fit metric undefined for constant theta0");
    return 100.0 * (1.0 - (theta_hat - theta0).norm() / denom);
}

GainCurve regularization_gain_curve(const MatrixXd& A, const VectorXd& beta_grid,
                                    const MatrixXd& phi, const VectorXd& theta0, double sigma2) {
    if (sigma2 <= 0) throw DomainError("sigma2 must be positive");
    const int n = static_cast<int>(phi.cols());
    const int N = static_cast<int>(phi.rows());
    if (A.rows() != n || A.cols() != n || theta0.size() != n)
        throw DimensionError("regularization_gain_curve dimension mismatch");
    if ((beta_grid.array() <= 0).any()) throw DomainError("beta grid must be strictly positive");
    check_psd_kernel(A);

    const MatrixXd gram = phi.transpose() * phi;
    const MatrixXd C = psd_factor(gram);
    const MatrixXd gram_inv = spd_inverse(gram);

    GainCurve curve;
    curve.beta = beta_grid;
    curve.mseg.resize(beta_grid.size());
    curve.msey.resize(beta_grid.size());
    curve.mseg_ls = sigma2 * gram_inv.trace();
    curve.msey_ls = sigma2 * static_cast<double>(N + n);

    const VectorXd Atheta = A * theta0;
    for (Eigen::Index i = 0; i < beta_grid.size(); ++i) {
        const double beta = beta_grid(i);
        Eigen::LDLT<MatrixXd> K((gram + beta * A).eval());
        const VectorXd v = K.solve(Atheta);
        const double bias_g = beta * beta * v.squaredNorm();
        const MatrixXd KC = K.solve(C);
        const double var_g = sigma2 * KC.squaredNorm();
        curve.mseg(i) = bias_g + var_g;
        const double bias_y = beta * beta * (C.transpose() * v).squaredNorm();
        const double var_y = sigma2 * (C.transpose() * KC).squaredNorm();
        curve.msey(i) = bias_y + var_y + N * sigma2;
    }
    return curve;
}

double sigma2_estimate(const Dataset& d) {
    if (d.N <= d.n) throw DimensionError("sigma2 estimate requires N > n");
    const VectorXd residual = d.y - d.phi * ls_estimate(d);
    return residual.squaredNorm() / static_cast<double>(d.N - d.n);
}

}  // namespace regkern
