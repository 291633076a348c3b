#pragma once

#include <array>
#include <string>
#include <vector>

#include "regkern/types.hpp"

namespace regkern {

/// Kernel families for the impulse-response prior covariance.
enum class KernelFamily { SS, DC, TC, Ridge, Diagonal };

std::string family_tag(KernelFamily f);
KernelFamily family_from_tag(const std::string& tag);

/// Number of hyperparameters of a family at model order n.
int family_param_count(KernelFamily f, int n);

/// Per-coordinate closed interval bounds [lo, hi].
using Box = std::vector<std::array<double, 2>>;

/// Implementation feasible boxes, strictly interior to the theoretical
/// constraint sets except for the Ridge/Diagonal floor at exactly 0.
Box default_omega(KernelFamily f, int n);

/// A valid interior hyperparameter point of the family's default box, for
/// callers that need a well-formed spec before any fitting has happened.
VectorXd neutral_eta(KernelFamily f, int n);

/// A kernel family instance: which family, its hyperparameters, the model
/// order, and the feasible box the hyperparameters must lie in.
struct KernelSpec {
    KernelFamily family = KernelFamily::TC;
    VectorXd eta;
    int n = 0;
    Box omega;

    static KernelSpec make(KernelFamily f, const VectorXd& eta, int n);
};

/// Build P(eta). Validates eta against spec.omega and the result for symmetry
/// and positive semidefiniteness.
MatrixXd kernel_matrix(const KernelSpec& spec);

/// Analytic elementwise derivative of kernel_matrix in hyperparameter
/// coordinate i (0-based). Requires eta strictly inside omega.
MatrixXd kernel_gradient(const KernelSpec& spec, int i);

}  // namespace regkern
