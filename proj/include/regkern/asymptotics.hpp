#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "regkern/criteria.hpp"
#include "regkern/hyperopt.hpp"
#include "regkern/kernels.hpp"
#include "regkern/types.hpp"

namespace regkern {

/// The three large-sample limit functionals of the selection criteria. Each
/// criterion, suitably shifted and rescaled, localizes around one of them:
/// g for the parameter-error pair (MSEg, SUREg), y for the prediction-error
/// pair (MSEy, SUREy), B for the marginal-likelihood pair (EEB, EB).
enum class LimitKind { g, y, B };

std::string limit_tag(LimitKind k);
LimitKind limit_from_tag(const std::string& tag);
/// The limit functional whose minimizer a criterion's estimate approaches.
LimitKind matching_limit(CriterionKind kind);

/// Ground truth for the large-sample analysis: the limit Sigma of
/// Phi^T Phi / N, the true parameters, the noise variance, and the kernel
/// family whose feasible box the limit functionals are minimized over.
struct LimitSpec {
    MatrixXd Sigma;    ///< symmetric positive definite, n x n
    VectorXd theta0;   ///< length n
    double sigma2 = 1.0;
    KernelSpec family;
};

/// Limit of the rescaled parameter-error criteria at fixed kernel matrix P:
///   sigma^4 theta0^T P^-T Sigma^-2 P^-1 theta0
///     - 2 sigma^4 Tr(Sigma^-1 P^-1 Sigma^-1).
/// Throws IllConditionedError for (numerically) singular P.
double w_g(const MatrixXd& P, const LimitSpec& ls);

/// Limit of the rescaled prediction-error criteria:
///   sigma^4 theta0^T P^-T Sigma^-1 P^-1 theta0 - 2 sigma^4 Tr(Sigma^-1 P^-1).
double w_y(const MatrixXd& P, const LimitSpec& ls);

/// Limit of the shifted marginal-likelihood criteria:
///   theta0^T P^-1 theta0 + log det P.
/// Diverges to -inf as P approaches the rank-one matrix theta0 theta0^T
/// from inside the positive definite cone (for n >= 2), which is why the
/// minimization is only meaningful within a kernel family.
double w_b(const MatrixXd& P, const VectorXd& theta0);

double limit_value(LimitKind kind, const MatrixXd& P, const LimitSpec& ls);

/// Elementwise derivative of the limit functional with respect to P (entries
/// treated as independent). Valid at any invertible P, symmetric or not.
MatrixXd limit_grad_P(LimitKind kind, const MatrixXd& P, const LimitSpec& ls);

/// Minimizer of the limit functional over ls.family's feasible box, by the
/// same multi-start machinery used for the data-driven criteria, with
/// analytic gradients. For the ridge family the result has closed forms
///   g: theta0^T Sigma^-2 theta0 / Tr(Sigma^-2)
///   y: theta0^T Sigma^-1 theta0 / Tr(Sigma^-1)
///   B: theta0^T theta0 / n
/// which coincide when Sigma is a positive multiple of the identity.
/// Throws NonConvergenceError when no start certifies convergence.
VectorXd limit_eta(LimitKind kind, const LimitSpec& ls, const OptimizerConfig& cfg = {});

/// Residual of the stationarity system satisfied by interior minimizers of
/// the limit functional: component i is the trace of the system matrix
///   g: P^-1 Sigma^-2 P^-1 (P - theta0 theta0^T) P^-1
///   y: P^-1 Sigma^-1 P^-1 (P - theta0 theta0^T) P^-1
///   B: P^-1 (P - theta0 theta0^T) P^-1
/// against dP/deta_i. Composed literally from explicit inverses as an
/// independent check on limit_eta; near zero at interior minimizers.
VectorXd stationarity_residual(LimitKind kind, const VectorXd& eta, const LimitSpec& ls);

/// The criterion shifted by data-dependent constants (functions of Y and the
/// Gram matrix only) and rescaled so that, at fixed P, the value converges
/// to the matching limit functional as N grows:
///   MSEg:  N^2 (value - sigma^2 Tr(G^-1))
///   SUREg: N^2 (value - sigma^2 Tr(G^-1))
///   MSEy:  N   (value - (n + N) sigma^2)
///   SUREy: N   (value + Y^T Phi G^-1 Phi^T Y - Y^T Y - 2 n sigma^2)
///   EEB:        value - (N - n) - (N - n) log sigma^2 - log det G
///   EB:         value + (Y^T Phi G^-1 Phi^T Y - Y^T Y) / sigma^2
///                     - (N - n) log sigma^2 - log det G
/// with G = Phi^T Phi. Requires an invertible Gram matrix; theta0 must be
/// supplied exactly for the oracle kinds.
double shifted_criterion(CriterionKind kind, const MatrixXd& P, DatasetCachePtr cache,
                         double sigma2, const VectorXd* theta0 = nullptr);
double shifted_criterion(CriterionKind kind, const MatrixXd& P, const Dataset& d, double sigma2,
                         const VectorXd* theta0 = nullptr);

/// Symmetric Toeplitz matrix with first column gamma.
MatrixXd toeplitz(const VectorXd& gamma);

/// The n x n stationary covariance of the benchmark input process `kind`,
/// i.e. the large-N limit of Phi^T Phi / N for that input.
MatrixXd input_sigma(const std::string& kind, int n);

// ---------------------------------------------------------------------------
// Convergence-rate experiment
// ---------------------------------------------------------------------------

struct RateRow {
    std::string kind;  ///< estimator tag, or contrast tag like "EEB-EB"
    int N = 0;
    int replicate = 0;
    double error = 0;  ///< ||eta_hat - eta*||, or the contrast distance
};

struct RateResult {
    std::vector<int> N_grid;
    /// The six estimator tags followed by the three within-pair contrast
    /// series "SUREg-MSEg", "SUREy-MSEy", "EEB-EB".
    std::vector<std::string> kinds;
    std::map<std::string, VectorXd> eta_star;  ///< per limit tag "g"/"y"/"B"
    std::map<std::string, std::vector<double>> median_errors;  ///< kind -> per-N
    std::map<std::string, double> fitted_slope;  ///< log median error vs log N
    std::map<std::string, std::array<double, 2>> slope_ci;  ///< bootstrap 95%
    int dropped = 0;           ///< replicates lost to estimation failures
    std::vector<RateRow> rows; ///< ordered by (kind order, N, replicate)
};

/// For each grid size N and replicate: simulate data from ls.theta0 with
/// input `input_kind` at noise variance ls.sigma2, run all six estimators
/// over ls.family, and record the distance of each estimate to the matching
/// limit_eta plus the three within-pair contrasts. The input realization is
/// drawn once per grid size and shared by its replicates; replication varies
/// the noise only, so series track each criterion's convergence rather than
/// design fluctuations. A replicate on which any
/// estimator fails is dropped entirely (and counted), so every series is
/// computed over the same replicates. Slopes of log median error against
/// log N are fitted per series, with percentile bootstrap intervals (1000
/// resamples) drawn from a dedicated random stream after the deterministic
/// reduction. ls.Sigma must be the stationary input covariance; build it
/// with input_sigma. Requires at least 3 grid points and 20 replicates.
RateResult convergence_rate_experiment(const LimitSpec& ls, const std::string& input_kind,
                                       const std::vector<int>& N_grid, int replicates,
                                       std::uint64_t seed, const OptimizerConfig& opt = {});
/// Same computation without the parallel work-item loop; byte-identical
/// results to convergence_rate_experiment.
RateResult convergence_rate_experiment_serial(const LimitSpec& ls, const std::string& input_kind,
                                              const std::vector<int>& N_grid, int replicates,
                                              std::uint64_t seed,
                                              const OptimizerConfig& opt = {});

/// CSV with header "kind,N,replicate,error", one row per surviving
/// (series, N, replicate) triple, full double precision.
void write_rate_csv(const RateResult& r, std::ostream& os);
/// JSON summary: grid, dropped count, limit minimizers, and per-series
/// medians, slope, and slope interval.
std::string rate_summary_json(const RateResult& r);

}  // namespace regkern
