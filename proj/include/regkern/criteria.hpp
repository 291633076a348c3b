#pragma once

#include <Eigen/LU>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "regkern/kernels.hpp"
#include "regkern/types.hpp"

namespace regkern {

/// The six hyperparameter-selection criteria. The oracle kinds (MSEg, MSEy,
/// EEB) require the true parameter vector.
enum class CriterionKind { EB, SUREg, SUREy, MSEg, MSEy, EEB };

bool criterion_is_oracle(CriterionKind kind);
std::string criterion_tag(CriterionKind kind);
CriterionKind criterion_from_tag(const std::string& tag);

/// Per-dataset quantities shared by every criterion evaluation: the Gram
/// matrix, its factorizations, and cheap scalars. Immutable after
/// construction; safe to share across threads (lazy members are guarded).
class DatasetCache {
  public:
    explicit DatasetCache(const Dataset& d);

    MatrixXd gram;    ///< Phi^T Phi
    VectorXd phiTy;   ///< Phi^T Y
    double yTy = 0;   ///< Y^T Y
    int N = 0;
    int n = 0;
    double cond_gram = 0;        ///< condition estimate of gram
    bool gram_invertible = false; ///< cond_gram below the refusal threshold
    VectorXd theta_ls;           ///< LS estimate (empty when not invertible)
    double logdet_gram = 0;      ///< defined only when invertible

    /// Inverse of gram; computed on first use. Throws IllConditionedError
    /// when gram is beyond the condition threshold.
    const MatrixXd& gram_inverse() const;
    double trace_gram_inverse() const;
    /// A factor C with C C^T = gram (computed on first use).
    const MatrixXd& gram_factor() const;

  private:
    mutable std::once_flag inv_once_, factor_once_;
    mutable std::shared_ptr<MatrixXd> gram_inv_;
    mutable std::shared_ptr<MatrixXd> gram_factor_;
};

using DatasetCachePtr = std::shared_ptr<const DatasetCache>;
DatasetCachePtr make_dataset_cache(const Dataset& d);

/// How much of DerivedQuantities to populate. The light level carries what
/// criterion evaluation needs; the full level adds S and (when P is
/// invertible) R for identity checking and the rewritten gradient forms.
enum class DeriveDepth { light, full };

/// n-dimensional surrogates of the output covariance Q = Phi P Phi^T +
/// sigma2 I, which is never materialized here: H = P*gram + sigma2 I and
/// Hbar = gram*P + sigma2 I carry all of Q's action on the column space.
struct DerivedQuantities {
    DatasetCachePtr data;
    double sigma2 = 0;
    MatrixXd P;
    bool p_exactly_symmetric = false;

    MatrixXd H;     ///< P*gram + sigma2 I
    MatrixXd Hbar;  ///< gram*P + sigma2 I
    std::shared_ptr<Eigen::PartialPivLU<MatrixXd>> H_lu;
    std::shared_ptr<Eigen::PartialPivLU<MatrixXd>> Hbar_lu;  ///< null when P symmetric (Hbar = H^T)
    double logdet_H = 0;   ///< equals log det Q - (N-n) log sigma2
    VectorXd theta_r;      ///< regularized estimate at this P

    std::optional<MatrixXd> S;  ///< P + sigma2 gram^{-1} (full depth, gram invertible)
    std::optional<MatrixXd> R;  ///< gram + sigma2 P^{-1} (full depth, P invertible)

    /// Solve Hbar x = b, using the shared factorization when P is symmetric.
    MatrixXd hbar_solve(const MatrixXd& rhs) const;
};

DerivedQuantities derived_quantities(const MatrixXd& P, const Dataset& d, double sigma2,
                                     DeriveDepth depth = DeriveDepth::full);
DerivedQuantities derived_quantities(const MatrixXd& P, DatasetCachePtr cache, double sigma2,
                                     DeriveDepth depth = DeriveDepth::light);

/// Criterion value at kernel matrix P. theta0 must be non-null exactly for
/// oracle kinds. Faithful to asymmetric P (finite-difference probes included).
double criterion_value(CriterionKind kind, const DerivedQuantities& dq,
                       const VectorXd* theta0 = nullptr);
double criterion_value(CriterionKind kind, const MatrixXd& P, const Dataset& d, double sigma2,
                       const VectorXd* theta0 = nullptr);

/// Elementwise derivative of the criterion with respect to P (entries treated
/// as independent), evaluated at symmetric P via n-dimensional identities.
MatrixXd criterion_grad_P(CriterionKind kind, const DerivedQuantities& dq,
                          const VectorXd* theta0 = nullptr);
MatrixXd criterion_grad_P(CriterionKind kind, const MatrixXd& P, const Dataset& d, double sigma2,
                          const VectorXd* theta0 = nullptr);

/// The same derivative in the S-sandwich form. Requires an invertible Gram
/// matrix; must agree with criterion_grad_P to 1e-8 relative.
MatrixXd criterion_grad_P_rewritten(CriterionKind kind, const DerivedQuantities& dq,
                                    const VectorXd* theta0 = nullptr);
MatrixXd criterion_grad_P_rewritten(CriterionKind kind, const MatrixXd& P, const Dataset& d,
                                    double sigma2, const VectorXd* theta0 = nullptr);

/// Chain-rule gradient with respect to the kernel hyperparameters:
/// component i is Tr(grad_P * (dP/deta_i)^T).
VectorXd criterion_grad_eta(CriterionKind kind, const KernelSpec& spec, const Dataset& d,
                            double sigma2, const VectorXd* theta0 = nullptr);
VectorXd criterion_grad_eta(CriterionKind kind, const KernelSpec& spec, DatasetCachePtr cache,
                            double sigma2, const VectorXd* theta0 = nullptr);

/// Discrepancy of the exact algebraic relation tying the prediction-error
/// SURE criterion to the parameter-error one (kernel-independent constant
/// included). Returns nullopt when P is not invertible (relation undefined).
std::optional<double> surey_sureg_relation_check(const MatrixXd& P, const Dataset& d,
                                                 double sigma2);

}  // namespace regkern
