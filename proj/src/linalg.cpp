#include "regkern/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "regkern/errors.hpp"

namespace regkern {

MatrixXd symmetric_part(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

bool is_symmetric(const MatrixXd& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

double condition_estimate(const MatrixXd& sym) {
    // Exact 2-norm condition via eigenvalues; LDLT's rcond estimate is
    // unreliable for (near-)singular input. Non-positive smallest eigenvalue
    // means the matrix cannot be safely inverted, reported as infinity.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0) || !std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

double logdet_lu(const MatrixXd& m, bool* positive) {
    Eigen::PartialPivLU<MatrixXd> lu(m);
    const auto& u = lu.matrixLU();
    double logabs = 0;
    double sign = lu.permutationP().determinant();  // +1 or -1
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double d = u(i, i);
        if (d == 0.0) {
            if (positive) *positive = false;
            return -std::numeric_limits<double>::infinity();
        }
        logabs += std::log(std::abs(d));
        if (d < 0) sign = -sign;
    }
    if (positive) *positive = sign > 0;
    return logabs;
}

double logdet_spd(const MatrixXd& sym) {
    Eigen::LLT<MatrixXd> llt(sym);
    if (llt.info() != Eigen::Success)
        throw InvalidKernelError("matrix is not positive definite in logdet_spd");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

MatrixXd psd_factor(const MatrixXd& sym, double tol) {
    Eigen::LLT<MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw InvalidKernelError("eigendecomposition failed in psd_factor");
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    VectorXd clipped = es.eigenvalues();
    for (Eigen::Index i = 0; i < clipped.size(); ++i) {
        if (clipped(i) < -tol * scale)
            throw InvalidKernelError("matrix has a negative eigenvalue in psd_factor");
        clipped(i) = std::max(clipped(i), 0.0);
    }
    return es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
}

MatrixXd spd_inverse(const MatrixXd& sym) {
    Eigen::LDLT<MatrixXd> ldlt(sym);
    return ldlt.solve(MatrixXd::Identity(sym.rows(), sym.cols()));
}

}  // namespace regkern
