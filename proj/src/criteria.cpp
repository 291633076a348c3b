#include "regkern/criteria.hpp"

#include <cmath>
#include <mutex>

#include "regkern/errors.hpp"
#include "regkern/linalg.hpp"

namespace regkern {

bool criterion_is_oracle(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::MSEg:
        case CriterionKind::MSEy:
        case CriterionKind::EEB: return true;
        default: return false;
    }
}

std::string criterion_tag(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::EB: return "EB";
        case CriterionKind::SUREg: return "SUREg";
        case CriterionKind::SUREy: return "SUREy";
        case CriterionKind::MSEg: return "MSEg";
        case CriterionKind::MSEy: return "MSEy";
        case CriterionKind::EEB: return "EEB";
    }
    throw ConfigError("unknown criterion kind");
}

CriterionKind criterion_from_tag(const std::string& tag) {
    if (tag == "EB" || tag == "eb") return CriterionKind::EB;
    if (tag == "SUREg" || tag == "sureg") return CriterionKind::SUREg;
    if (tag == "SUREy" || tag == "surey") return CriterionKind::SUREy;
    if (tag == "MSEg" || tag == "mseg") return CriterionKind::MSEg;
    if (tag == "MSEy" || tag == "msey") return CriterionKind::MSEy;
    if (tag == "EEB" || tag == "eeb") return CriterionKind::EEB;
    throw ConfigError("unknown criterion tag: " + tag);
}

DatasetCache::DatasetCache(const Dataset& d) {
    N = d.N;
    n = d.n;
    if (N < n || n < 1) throw DimensionError("dataset cache requires N >= n >= 1");
    gram = MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(d.phi.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    phiTy = d.phi.transpose() * d.y;
    yTy = d.y.squaredNorm();

    cond_gram = condition_estimate(gram);
    gram_invertible = cond_gram < kConditionLimit;
    if (gram_invertible) {
        Eigen::LDLT<MatrixXd> ldlt(gram);
        theta_ls = ldlt.solve(phiTy);
        const auto& dvec = ldlt.vectorD();
        if ((dvec.array() <= 0).any()) {
            gram_invertible = false;
            theta_ls.resize(0);
        } else {
            logdet_gram = dvec.array().log().sum();
        }
    }
}

const MatrixXd& DatasetCache::gram_inverse() const {
    std::call_once(inv_once_, [this] {
        if (!gram_invertible)
            throw IllConditionedError("Gram matrix too ill-conditioned to invert", cond_gram);
        gram_inv_ = std::make_shared<MatrixXd>(spd_inverse(gram));
    });
    if (!gram_inv_)
        throw IllConditionedError("Gram matrix too ill-conditioned to invert", cond_gram);
    return *gram_inv_;
}

double DatasetCache::trace_gram_inverse() const { return gram_inverse().trace(); }

const MatrixXd& DatasetCache::gram_factor() const {
    std::call_once(factor_once_, [this] { gram_factor_ = std::make_shared<MatrixXd>(psd_factor(gram)); });
    return *gram_factor_;
}

DatasetCachePtr make_dataset_cache(const Dataset& d) {
    return std::make_shared<const DatasetCache>(d);
}

MatrixXd DerivedQuantities::hbar_solve(const MatrixXd& rhs) const {
    if (Hbar_lu) return Hbar_lu->solve(rhs);
    return H_lu->transpose().solve(rhs);
}

DerivedQuantities derived_quantities(const MatrixXd& P, DatasetCachePtr cache, double sigma2,
                                     DeriveDepth depth) {
    if (sigma2 <= 0) throw DomainError("sigma2 must be positive");
    const int n = cache->n;
    if (P.rows() != n || P.cols() != n) throw DimensionError("kernel size does not match model order");
    if (!all_finite(P)) throw InvalidKernelError("kernel matrix has non-finite entries");

    DerivedQuantities dq;
    dq.data = std::move(cache);
    dq.sigma2 = sigma2;
    dq.P = P;
    dq.p_exactly_symmetric = (P - P.transpose()).cwiseAbs().maxCoeff() == 0.0;

    dq.H = P * dq.data->gram;
    dq.H.diagonal().array() += sigma2;
    dq.H_lu = std::make_shared<Eigen::PartialPivLU<MatrixXd>>(dq.H);
    if (dq.p_exactly_symmetric) {
        dq.Hbar = dq.H.transpose();
    } else {
        dq.Hbar = dq.data->gram * P;
        dq.Hbar.diagonal().array() += sigma2;
        dq.Hbar_lu = std::make_shared<Eigen::PartialPivLU<MatrixXd>>(dq.Hbar);
    }

    bool positive = true;
    double logabs = 0;
    {
        const auto& lu_mat = dq.H_lu->matrixLU();
        double sign = dq.H_lu->permutationP().determinant();
        for (int i = 0; i < n; ++i) {
            const double v = lu_mat(i, i);
            if (v == 0.0) { positive = false; break; }
            logabs += std::log(std::abs(v));
            if (v < 0) sign = -sign;
        }
        if (positive) positive = sign > 0;
    }
    if (!positive)
        throw InvalidKernelError("P*gram + sigma2*I has a non-positive determinant; kernel is not psd");
    dq.logdet_H = logabs;

    dq.theta_r = dq.H_lu->solve(P * dq.data->phiTy);

    if (depth == DeriveDepth::full) {
        if (dq.data->gram_invertible)
            dq.S = P + sigma2 * dq.data->gram_inverse();
        if (is_symmetric(P, 1e-12)) {
            const double cond_p = condition_estimate(P);
            if (cond_p < kConditionLimit) {
                Eigen::LDLT<MatrixXd> pldlt(symmetric_part(P));
                dq.R = dq.data->gram +
                       sigma2 * pldlt.solve(MatrixXd::Identity(n, n));
            }
        }
    }
    return dq;
}

DerivedQuantities derived_quantities(const MatrixXd& P, const Dataset& d, double sigma2,
                                     DeriveDepth depth) {
    return derived_quantities(P, make_dataset_cache(d), sigma2, depth);
}

namespace {

void require_theta0(CriterionKind kind, const VectorXd* theta0, int n) {
    if (criterion_is_oracle(kind)) {
        if (!theta0) throw DomainError("criterion " + criterion_tag(kind) + " requires theta0");
        if (theta0->size() != n) throw DimensionError("theta0 length does not match model order");
    }
}

void require_sureg_conditioning(const DatasetCache& data) {
    if (!data.gram_invertible)
        throw IllConditionedError("SUREg refused: Gram matrix condition exceeds threshold",
                                  data.cond_gram);
}

double trace_h_inverse(const DerivedQuantities& dq) {
    // Tr((gram*P + s2 I)^{-1}) equals Tr((P*gram + s2 I)^{-1}) because the two
    // products share their spectrum, so one factorization serves both.
    return dq.H_lu->inverse().trace();
}

}  // namespace

double criterion_value(CriterionKind kind, const DerivedQuantities& dq, const VectorXd* theta0) {
    const auto& data = *dq.data;
    const double s2 = dq.sigma2;
    const int N = data.N, n = data.n;
    require_theta0(kind, theta0, n);

    switch (kind) {
        case CriterionKind::EB: {
            // Y^T Q^{-1} Y + log det Q, via Q^{-1}Y = (Y - Phi theta_r)/s2 and
            // the low-rank determinant identity.
            return (data.yTy - data.phiTy.dot(dq.theta_r)) / s2 +
                   (N - n) * std::log(s2) + dq.logdet_H;
        }
        case CriterionKind::SUREy: {
            const double res2 = data.yTy - 2.0 * data.phiTy.dot(dq.theta_r) +
                                dq.theta_r.dot(data.gram * dq.theta_r);
            const double trace_term = n - s2 * trace_h_inverse(dq);
            return res2 + 2.0 * s2 * trace_term;
        }
        case CriterionKind::SUREg: {
            require_sureg_conditioning(data);
            const VectorXd delta = data.theta_ls - dq.theta_r;
            const double tr_rinv = dq.H_lu->solve(dq.P).trace();  // Tr(R^{-1}) = Tr(H^{-1}P)
            return delta.squaredNorm() + s2 * (2.0 * tr_rinv - data.trace_gram_inverse());
        }
        case CriterionKind::MSEg: {
            const VectorXd w = dq.H_lu->solve(*theta0);
            const MatrixXd X = dq.hbar_solve(data.gram_factor());
            return s2 * s2 * w.squaredNorm() + s2 * (dq.P * X).squaredNorm();
        }
        case CriterionKind::MSEy: {
            const VectorXd w = dq.H_lu->solve(*theta0);
            const MatrixXd& C = data.gram_factor();
            const MatrixXd X = dq.hbar_solve(C);
            return s2 * s2 * (C.transpose() * w).squaredNorm() + N * s2 +
                   s2 * (C.transpose() * (dq.P * X)).squaredNorm();
        }
        case CriterionKind::EEB: {
            const VectorXd w = dq.H_lu->solve(*theta0);
            return theta0->dot(data.gram * w) + (N - n) + s2 * trace_h_inverse(dq) +
                   (N - n) * std::log(s2) + dq.logdet_H;
        }
    }
    throw ConfigError("unknown criterion kind");
}

double criterion_value(CriterionKind kind, const MatrixXd& P, const Dataset& d, double sigma2,
                       const VectorXd* theta0) {
    return criterion_value(kind, derived_quantities(P, d, sigma2, DeriveDepth::light), theta0);
}

MatrixXd criterion_grad_P(CriterionKind kind, const DerivedQuantities& dq,
                          const VectorXd* theta0) {
    const auto& data = *dq.data;
    const double s2 = dq.sigma2;
    const int n = data.n;
    require_theta0(kind, theta0, n);
    if (!is_symmetric(dq.P, 1e-12))
        throw DomainError("criterion_grad_P is defined at symmetric P");

    const MatrixXd Hinv = dq.H_lu->inverse();
    const MatrixXd Ht = Hinv.transpose();
    const VectorXd u = Ht * data.phiTy;  // Phi^T Q^{-1} Y in n-dimensional form
    const double s4 = s2 * s2;

    switch (kind) {
        case CriterionKind::EB:
            return Ht * data.gram - u * u.transpose();
        case CriterionKind::SUREy:
            return 2.0 * s4 * (Ht * (Ht * data.gram - u * u.transpose()));
        case CriterionKind::SUREg: {
            require_sureg_conditioning(data);
            const VectorXd gu = data.gram_inverse() * u;
            return 2.0 * s4 * (Ht * (Hinv - gu * u.transpose()));
        }
        case CriterionKind::MSEg: {
            const MatrixXd centered = dq.P - *theta0 * theta0->transpose();
            return 2.0 * s4 * (Ht * (Hinv * (centered * (Ht * data.gram))));
        }
        case CriterionKind::MSEy: {
            const MatrixXd centered = dq.P - *theta0 * theta0->transpose();
            const MatrixXd HtG = Ht * data.gram;
            return 2.0 * s4 * (HtG * (Hinv * (centered * HtG)));
        }
        case CriterionKind::EEB: {
            const MatrixXd centered = dq.P - *theta0 * theta0->transpose();
            const MatrixXd HtG = Ht * data.gram;
            return HtG * centered * HtG;
        }
    }
    throw ConfigError("unknown criterion kind");
}

MatrixXd criterion_grad_P(CriterionKind kind, const MatrixXd& P, const Dataset& d, double sigma2,
                          const VectorXd* theta0) {
    return criterion_grad_P(kind, derived_quantities(P, d, sigma2, DeriveDepth::light), theta0);
}

MatrixXd criterion_grad_P_rewritten(CriterionKind kind, const DerivedQuantities& dq,
                                    const VectorXd* theta0) {
    const auto& data = *dq.data;
    const double s2 = dq.sigma2;
    const int n = data.n;
    require_theta0(kind, theta0, n);
    if (!is_symmetric(dq.P, 1e-12))
        throw DomainError("criterion_grad_P_rewritten is defined at symmetric P");
    if (!data.gram_invertible)
        throw IllConditionedError("rewritten gradient forms require an invertible Gram matrix",
                                  data.cond_gram);

    const MatrixXd& Ginv = data.gram_inverse();
    const MatrixXd S = dq.S ? *dq.S : MatrixXd(dq.P + s2 * Ginv);
    Eigen::LDLT<MatrixXd> sldlt(symmetric_part(S));
    const MatrixXd Sinv = sldlt.solve(MatrixXd::Identity(n, n));
    const double s4 = s2 * s2;

    switch (kind) {
        case CriterionKind::EB: {
            const VectorXd v = Sinv * data.theta_ls;
            return Sinv - v * v.transpose();
        }
        case CriterionKind::EEB:
            return Sinv * (dq.P - *theta0 * theta0->transpose()) * Sinv;
        case CriterionKind::SUREg: {
            const MatrixXd left = Sinv * Ginv * Ginv * Sinv;
            const MatrixXd centered = S - data.theta_ls * data.theta_ls.transpose();
            return 2.0 * s4 * (left * centered * Sinv);
        }
        case CriterionKind::MSEg: {
            const MatrixXd left = Sinv * Ginv * Ginv * Sinv;
            const MatrixXd centered = dq.P - *theta0 * theta0->transpose();
            return 2.0 * s4 * (left * centered * Sinv);
        }
        case CriterionKind::SUREy: {
            const MatrixXd left = Sinv * Ginv * Sinv;
            const MatrixXd centered = S - data.theta_ls * data.theta_ls.transpose();
            return 2.0 * s4 * (left * centered * Sinv);
        }
        case CriterionKind::MSEy: {
            const MatrixXd left = Sinv * Ginv * Sinv;
            const MatrixXd centered = dq.P - *theta0 * theta0->transpose();
            return 2.0 * s4 * (left * centered * Sinv);
        }
    }
    throw ConfigError("unknown criterion kind");
}

MatrixXd criterion_grad_P_rewritten(CriterionKind kind, const MatrixXd& P, const Dataset& d,
                                    double sigma2, const VectorXd* theta0) {
    return criterion_grad_P_rewritten(kind, derived_quantities(P, d, sigma2, DeriveDepth::full),
                                      theta0);
}

VectorXd criterion_grad_eta(CriterionKind kind, const KernelSpec& spec, DatasetCachePtr cache,
                            double sigma2, const VectorXd* theta0) {
    const MatrixXd P = kernel_matrix(spec);
    const DerivedQuantities dq = derived_quantities(P, std::move(cache), sigma2, DeriveDepth::light);
    const MatrixXd grad = criterion_grad_P(kind, dq, theta0);
    const int p = family_param_count(spec.family, spec.n);
    VectorXd g(p);
    for (int i = 0; i < p; ++i)
        g(i) = grad.cwiseProduct(kernel_gradient(spec, i)).sum();  // Tr(grad * dP_i^T)
    return g;
}

VectorXd criterion_grad_eta(CriterionKind kind, const KernelSpec& spec, const Dataset& d,
                            double sigma2, const VectorXd* theta0) {
    return criterion_grad_eta(kind, spec, make_dataset_cache(d), sigma2, theta0);
}

std::optional<double> surey_sureg_relation_check(const MatrixXd& P, const Dataset& d,
                                                 double sigma2) {
    auto cache = make_dataset_cache(d);
    if (!cache->gram_invertible)
        throw IllConditionedError("relation check requires an invertible Gram matrix",
                                  cache->cond_gram);
    if (!is_symmetric(P, 1e-12)) throw DomainError("relation check expects symmetric P");
    const double cond_p = condition_estimate(P);
    if (!(cond_p < kConditionLimit)) return std::nullopt;  // R undefined for singular P

    const int n = cache->n;
    const DerivedQuantities dq = derived_quantities(P, cache, sigma2, DeriveDepth::light);
    const double f_sy = criterion_value(CriterionKind::SUREy, dq);

    Eigen::LDLT<MatrixXd> pldlt(symmetric_part(P));
    const MatrixXd Pinv = pldlt.solve(MatrixXd::Identity(n, n));
    const MatrixXd R = cache->gram + sigma2 * Pinv;
    const MatrixXd Rinv = Eigen::LDLT<MatrixXd>(symmetric_part(R)).solve(MatrixXd::Identity(n, n));

    const VectorXd delta = cache->theta_ls - dq.theta_r;
    const MatrixXd mid = delta * delta.transpose() +
                         sigma2 * (2.0 * Rinv - cache->gram_inverse());
    const double trace_term = (mid * cache->gram).trace();
    const double constant = cache->yTy - cache->phiTy.dot(cache->theta_ls) + n * sigma2;
    return std::abs(f_sy - trace_term - constant);
}

}  // namespace regkern
