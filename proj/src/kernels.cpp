#include "regkern/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "regkern/errors.hpp"
#include "regkern/linalg.hpp"

namespace regkern {

namespace {

constexpr double kScaleLo = 1e-8;
constexpr double kScaleHi = 1e8;
constexpr double kUnitMargin = 1e-6;

void validate_spec(const KernelSpec& spec, bool strict_interior) {
    if (spec.n < 1) throw DimensionError("kernel spec requires n >= 1");
    const int p = family_param_count(spec.family, spec.n);
    if (spec.eta.size() != p) throw DimensionError("kernel spec eta has wrong length");
    if (spec.omega.size() != static_cast<size_t>(p))
        throw DimensionError("kernel spec omega has wrong length");
    if (!spec.eta.allFinite()) throw DomainError("kernel spec eta has non-finite entries");
    for (int i = 0; i < p; ++i) {
        const double lo = spec.omega[i][0], hi = spec.omega[i][1], v = spec.eta(i);
        if (!(lo <= hi)) throw ConfigError("kernel spec omega interval is empty");
        if (strict_interior ? !(v > lo && v < hi) : !(v >= lo && v <= hi))
            throw DomainError("kernel hyperparameter outside its feasible interval");
    }
}

// One shared entry loop: both triangles filled from a single formula
// evaluation so symmetry is exact.
template <typename F>
MatrixXd fill_symmetric(int n, F entry) {
    MatrixXd P(n, n);
    for (int k = 1; k <= n; ++k) {
        for (int j = k; j <= n; ++j) {
            const double v = entry(k, j);
            P(k - 1, j - 1) = v;
            P(j - 1, k - 1) = v;
        }
    }
    return P;
}

}  // namespace

std::string family_tag(KernelFamily f) {
    switch (f) {
        case KernelFamily::SS: return "SS";
        case KernelFamily::DC: return "DC";
        case KernelFamily::TC: return "TC";
        case KernelFamily::Ridge: return "Ridge";
        case KernelFamily::Diagonal: return "Diagonal";
    }
    throw ConfigError("unknown kernel family");
}

KernelFamily family_from_tag(const std::string& tag) {
    if (tag == "SS" || tag == "ss") return KernelFamily::SS;
    if (tag == "DC" || tag == "dc") return KernelFamily::DC;
    if (tag == "TC" || tag == "tc") return KernelFamily::TC;
    if (tag == "Ridge" || tag == "ridge") return KernelFamily::Ridge;
    if (tag == "Diagonal" || tag == "diagonal" || tag == "diag") return KernelFamily::Diagonal;
    throw ConfigError("unknown kernel family tag: " + tag);
}

int family_param_count(KernelFamily f, int n) {
    switch (f) {
        case KernelFamily::SS: return 2;
        case KernelFamily::DC: return 3;
        case KernelFamily::TC: return 2;
        case KernelFamily::Ridge: return 1;
        case KernelFamily::Diagonal: return n;
    }
    throw ConfigError("unknown kernel family");
}

Box default_omega(KernelFamily f, int n) {
    const std::array<double, 2> scale{kScaleLo, kScaleHi};
    const std::array<double, 2> decay{kUnitMargin, 1.0 - kUnitMargin};
    const std::array<double, 2> corr{-1.0 + kUnitMargin, 1.0 - kUnitMargin};
    const std::array<double, 2> nonneg{0.0, kScaleHi};
    switch (f) {
        case KernelFamily::SS: return {scale, decay};
        case KernelFamily::TC: return {scale, decay};
        case KernelFamily::DC: return {scale, decay, corr};
        case KernelFamily::Ridge: return {nonneg};
        case KernelFamily::Diagonal: return Box(static_cast<size_t>(n), nonneg);
    }
    throw ConfigError("unknown kernel family");
}

VectorXd neutral_eta(KernelFamily f, int n) {
    switch (f) {
        case KernelFamily::TC:
        case KernelFamily::SS: return (VectorXd(2) << 1.0, 0.5).finished();
        case KernelFamily::DC: return (VectorXd(3) << 1.0, 0.5, 0.0).finished();
        case KernelFamily::Ridge: return VectorXd::Constant(1, 1.0);
        case KernelFamily::Diagonal: return VectorXd::Ones(n);
    }
    throw ConfigError("unknown kernel family");
}

KernelSpec KernelSpec::make(KernelFamily f, const VectorXd& eta, int n) {
    KernelSpec spec;
    spec.family = f;
    spec.eta = eta;
    spec.n = n;
    spec.omega = default_omega(f, n);
    return spec;
}

MatrixXd kernel_matrix(const KernelSpec& spec) {
    validate_spec(spec, /*strict_interior=*/false);
    const int n = spec.n;
    MatrixXd P;
    switch (spec.family) {
        case KernelFamily::TC: {
            const double c = spec.eta(0), a = spec.eta(1);
            P = fill_symmetric(n, [&](int k, int j) { return c * std::pow(a, std::max(k, j)); });
            break;
        }
        case KernelFamily::DC: {
            const double c = spec.eta(0), a = spec.eta(1), r = spec.eta(2);
            P = fill_symmetric(n, [&](int k, int j) {
                return c * std::pow(a, 0.5 * (k + j)) * std::pow(r, std::abs(j - k));
            });
            break;
        }
        case KernelFamily::SS: {
            const double c = spec.eta(0), a = spec.eta(1);
            P = fill_symmetric(n, [&](int k, int j) {
                const int m = std::max(k, j);
                return c * (0.5 * std::pow(a, k + j + m) - std::pow(a, 3 * m) / 6.0);
            });
            break;
        }
        case KernelFamily::Ridge:
            P = spec.eta(0) * MatrixXd::Identity(n, n);
            break;
        case KernelFamily::Diagonal:
            P = spec.eta.asDiagonal();
            break;
    }
    if (!all_finite(P)) throw InvalidKernelError("kernel matrix has non-finite entries");
    if (spec.family == KernelFamily::DC) {
        // Rounding can push extreme-correlation DC matrices slightly indefinite.
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(P, Eigen::EigenvaluesOnly);
        const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < -1e-10 * scale)
            throw InvalidKernelError("DC kernel matrix is not positive semidefinite");
    }
    return P;
}

MatrixXd kernel_gradient(const KernelSpec& spec, int i) {
    validate_spec(spec, /*strict_interior=*/true);
    const int p = family_param_count(spec.family, spec.n);
    if (i < 0 || i >= p) throw DomainError("kernel gradient coordinate out of range");
    const int n = spec.n;
    switch (spec.family) {
        case KernelFamily::TC: {
            const double c = spec.eta(0), a = spec.eta(1);
            if (i == 0)
                return fill_symmetric(n, [&](int k, int j) { return std::pow(a, std::max(k, j)); });
            return fill_symmetric(n, [&](int k, int j) {
                const int m = std::max(k, j);
                return c * m * std::pow(a, m - 1);
            });
        }
        case KernelFamily::DC: {
            const double c = spec.eta(0), a = spec.eta(1), r = spec.eta(2);
            if (i == 0)
                return fill_symmetric(n, [&](int k, int j) {
                    return std::pow(a, 0.5 * (k + j)) * std::pow(r, std::abs(j - k));
                });
            if (i == 1)
                return fill_symmetric(n, [&](int k, int j) {
                    return c * 0.5 * (k + j) * std::pow(a, 0.5 * (k + j) - 1.0) *
                           std::pow(r, std::abs(j - k));
                });
            return fill_symmetric(n, [&](int k, int j) {
                const int m = std::abs(j - k);
                if (m == 0) return 0.0;
                return c * std::pow(a, 0.5 * (k + j)) * m * std::pow(r, m - 1);
            });
        }
        case KernelFamily::SS: {
            const double c = spec.eta(0), a = spec.eta(1);
            if (i == 0)
                return fill_symmetric(n, [&](int k, int j) {
                    const int m = std::max(k, j);
                    return 0.5 * std::pow(a, k + j + m) - std::pow(a, 3 * m) / 6.0;
                });
            return fill_symmetric(n, [&](int k, int j) {
                const int m = std::max(k, j);
                return c * (0.5 * (k + j + m) * std::pow(a, k + j + m - 1) -
                            0.5 * m * std::pow(a, 3 * m - 1));
            });
        }
        case KernelFamily::Ridge:
            return MatrixXd::Identity(n, n);
        case KernelFamily::Diagonal: {
            MatrixXd g = MatrixXd::Zero(n, n);
            g(i, i) = 1.0;
            return g;
        }
    }
    throw ConfigError("unknown kernel family");
}

}  // namespace regkern
