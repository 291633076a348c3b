#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "regkern/criteria.hpp"
#include "regkern/errors.hpp"
#include "regkern/kernels.hpp"
#include "regkern/types.hpp"

namespace regkern {

/// Local-search methods for box-constrained criterion minimization.
enum class OptimMethod { gradient_quasi_newton, simplex_search };

std::string method_tag(OptimMethod m);
OptimMethod method_from_tag(const std::string& tag);

/// Controls the multi-start box-constrained minimization.
struct OptimizerConfig {
    int restarts = 8;        ///< Latin-hypercube starts, on top of one warm start
    int max_iters = 500;     ///< iteration cap per local search
    double grad_tol = 1e-8;  ///< converged when ||grad_x|| <= grad_tol * (1 + |value|)
    double step_tol = 1e-10; ///< stall/collapse tolerance in transformed coordinates
    std::uint64_t seed = 0;  ///< drives the Latin-hypercube start placement
    /// Local method; when unset, simplex_search is used for problems with at
    /// most 3 parameters and gradient_quasi_newton above that.
    std::optional<OptimMethod> method;
};

/// Raised when no restart of a minimization run reaches the convergence
/// certificate. Carries the best iterate found so the caller can inspect it.
struct NonConvergenceError : Error {
    VectorXd best_eta;
    double best_value;
    NonConvergenceError(const std::string& msg, VectorXd eta, double value)
        : Error(msg), best_eta(std::move(eta)), best_value(value) {}
};

/// Smooth bijection between the interior of a feasible box and R^p.
/// Coordinates with a positive lower bound are transformed in log space, so
/// scale parameters are searched multiplicatively; coordinates whose lower
/// bound is zero or negative are transformed linearly and approach the floor
/// exponentially in the unconstrained coordinate. Either way iterates stay
/// strictly inside the box for every finite input.
class BoxTransform {
  public:
    explicit BoxTransform(const Box& box);

    int dim() const { return static_cast<int>(lo_.size()); }
    /// Map unconstrained coordinates to a strictly interior box point.
    VectorXd to_eta(const VectorXd& x) const;
    /// Inverse map; box-boundary inputs are nudged inside before inversion.
    VectorXd to_x(const VectorXd& eta) const;
    /// Diagonal of the Jacobian d(eta)/d(x); transports gradients between
    /// the two coordinate systems.
    VectorXd jacobian(const VectorXd& x) const;

  private:
    std::vector<bool> log_mode_;
    std::vector<double> lo_, hi_;          ///< interval ends in transformed space
    std::vector<double> raw_lo_, raw_hi_;  ///< interval ends in original coordinates
    /// Smallest admissible logistic fraction near each end, chosen per
    /// coordinate so the mapped point is strictly inside the box in double
    /// precision (down to denormals for a floor at exactly zero).
    std::vector<double> clamp_lo_, clamp_hi_;
};

/// Outcome of one multi-start minimization over a feasible box.
struct BoxMinimum {
    VectorXd eta;   ///< minimizer in original coordinates
    VectorXd x;     ///< the same point in transformed coordinates
    double value = 0;
    OptimizerDiagnostics diagnostics;
};

/// Minimize `value` over the box by multi-start local search in transformed
/// coordinates: Latin-hypercube starts (cfg.restarts of them, placed by
/// cfg.seed) plus the supplied warm starts. `gradient` may be null; when
/// present it is used for quasi-newton steps, for polishing simplex results,
/// and for the convergence certificate ||grad_x|| <= grad_tol * (1 + |value|).
/// Trial points where `value` throws InvalidKernelError count as infeasible.
/// The winner is the lowest converged value, with ties (1e-12 relative)
/// broken by the smaller transformed-coordinate norm; the reduction is
/// ordered by start index, so results are independent of thread scheduling.
/// Coordinates that finish against the box floor are clamped onto it and
/// flagged in diagnostics.boundary.
/// Throws NonConvergenceError when no start converges.
BoxMinimum minimize_over_box(const std::function<double(const VectorXd&)>& value,
                             const std::function<VectorXd(const VectorXd&)>& gradient,
                             const Box& box, const std::vector<VectorXd>& warm_starts,
                             const OptimizerConfig& cfg);

/// Estimate kernel hyperparameters by minimizing the requested criterion over
/// spec.omega. theta0 must be supplied exactly for oracle criteria. The
/// report carries the criterion value, the regularized estimate at eta_hat,
/// the fit versus theta0 when available, and optimizer diagnostics.
/// A SUREg conditioning refusal (singular Gram matrix) propagates unchanged.
EstimateReport estimate_hyperparameter(CriterionKind kind, const KernelSpec& spec,
                                       const Dataset& d, double sigma2,
                                       const VectorXd* theta0 = nullptr,
                                       const OptimizerConfig& cfg = {});
EstimateReport estimate_hyperparameter(CriterionKind kind, const KernelSpec& spec,
                                       DatasetCachePtr cache, double sigma2,
                                       const VectorXd* theta0 = nullptr,
                                       const OptimizerConfig& cfg = {});

/// Closed-form marginal-likelihood ridge weight under an orthonormal-column
/// design (Phi^T Phi = N I): max(0, ||theta_ls||^2 / n - sigma2 / N).
/// The caller is responsible for certifying orthonormality.
double closed_form_ridge(const VectorXd& theta_ls, int n, int N, double sigma2);

/// Closed-form diagonal kernel weights under an orthonormal-column design:
/// component i is max(0, theta_ls_i^2 - sigma2 / N).
VectorXd closed_form_diagonal(const VectorXd& theta_ls, int N, double sigma2);

/// Oracle diagonal kernel weights: component i is theta0_i^2.
VectorXd closed_form_diagonal_oracle(const VectorXd& theta0);

/// The rank-one kernel theta0 theta0^T, which minimizes the exact parameter
/// MSE over all positive semidefinite kernels.
MatrixXd optimal_unconstrained_kernel(const VectorXd& theta0);

/// Relative departure of the design from orthonormal columns:
/// max |(Phi^T Phi - N I)_{ij}| / N. Zero for an exactly orthonormal design
/// scaled by sqrt(N); the closed forms above apply when this is <= 1e-8.
double orthonormality_defect(const Dataset& d);

}  // namespace regkern
