#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "regkern/bench.hpp"
#include "regkern/errors.hpp"
#include "regkern/model_core.hpp"
#include "regkern/rng.hpp"

namespace regkern {

namespace {

constexpr std::uint64_t kSaltSystem = 0x53595354;
constexpr std::uint64_t kSaltInput = 0x494e5055;
constexpr std::uint64_t kSaltNoise = 0x4e4f4953;

constexpr int kLowpassOrder = 50;
constexpr double kLowpassCutoff = 0.3;  // cycles/sample = 0.6 * Nyquist

/// Linear-phase windowed-sinc low-pass taps, normalized so a unit-variance
/// white input yields a unit-variance stationary output. The window is chosen
/// with moderate stopband attenuation: the band-limited input should make
/// Phi^T Phi ill-conditioned yet still numerically invertible.
VectorXd lowpass_taps() {
    const int M = kLowpassOrder;
    VectorXd h(M + 1);
    for (int k = 0; k <= M; ++k) {
        const double t = k - M / 2.0;
        const double ideal =
            t == 0.0 ? 2.0 * kLowpassCutoff
                     : std::sin(2.0 * std::numbers::pi * kLowpassCutoff * t) /
                           (std::numbers::pi * t);
        const double window =
            0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / M);  // Hamming
        h(k) = ideal * window;
    }
    return h / std::sqrt(h.squaredNorm());
}

/// Pole of the second-order rational filter 1/(1 - a q^-1)^2, or a negative
/// value for kinds without one.
double rational_pole(const std::string& kind) {
    if (kind == "IT3") return 0.95;
    if (kind == "IT4") return 0.05;
    return -1.0;
}

/// Stationary variance of 1/(1 - a q^-1)^2 driven by unit white noise:
/// the impulse response is (k+1) a^k, whose squared sum is (1+a^2)/(1-a^2)^3.
double rational_gamma0(double a) {
    const double d = 1.0 - a * a;
    return (1.0 + a * a) / (d * d * d);
}

VectorXd standard_normal(int count, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    VectorXd v(count);
    for (int i = 0; i < count; ++i) v(i) = nd(rng);
    return v;
}

}  // namespace

SystemTruth generate_test_system(int order, int fir_n, std::uint64_t seed) {
    if (order < 1) throw DimensionError("system order must be >= 1");
    if (fir_n < 1) throw DimensionError("impulse-response length must be >= 1");
    std::mt19937_64 rng = make_rng(seed, kSaltSystem);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> radius(0.5, 0.95);

    for (;;) {
        MatrixXd A(order, order);
        for (int j = 0; j < order; ++j)
            for (int i = 0; i < order; ++i) A(i, j) = nd(rng);
        const double rho = Eigen::EigenSolver<MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff();
        if (!(rho > 0) || !std::isfinite(rho)) continue;
        A *= radius(rng) / rho;

        const VectorXd B = standard_normal(order, rng);
        const VectorXd C = standard_normal(order, rng);

        VectorXd g(fir_n);
        VectorXd x = B;
        for (int k = 0; k < fir_n; ++k) {
            g(k) = C.dot(x);
            x = A * x;
        }
        const double norm = g.norm();
        if (!std::isfinite(norm) || norm < 1e-12) continue;

        SystemTruth sys;
        sys.theta0 = g / norm;
        sys.ss_order = order;
        return sys;
    }
}

VectorXd generate_input(const std::string& kind, int N, std::uint64_t seed) {
    if (N < 1) throw DimensionError("input length must be >= 1");
    std::mt19937_64 rng = make_rng(seed, kSaltInput);
    const VectorXd w = standard_normal(N, rng);

    if (kind == "IT2") return w;

    if (kind == "IT1") {
        const VectorXd h = lowpass_taps();
        VectorXd u = VectorXd::Zero(N);
        for (int t = 0; t < N; ++t) {
            const int kmax = std::min(t, kLowpassOrder);
            double acc = 0;
            for (int k = 0; k <= kmax; ++k) acc += h(k) * w(t - k);
            u(t) = acc;
        }
        return u;
    }

    const double a = rational_pole(kind);
    if (a >= 0) {
        VectorXd u(N);
        double v1 = 0, v2 = 0;  // zero initial state
        for (int t = 0; t < N; ++t) {
            const double v = w(t) + 2.0 * a * v1 - a * a * v2;
            u(t) = v;
            v2 = v1;
            v1 = v;
        }
        return u / std::sqrt(rational_gamma0(a));
    }

    throw ConfigError("unknown input kind: " + kind);
}

VectorXd input_autocovariance(const std::string& kind, int lags) {
    if (lags < 1) throw DimensionError("autocovariance needs at least one lag");
    VectorXd gamma = VectorXd::Zero(lags);

    if (kind == "IT2") {
        gamma(0) = 1.0;
        return gamma;
    }
    if (kind == "IT1") {
        const VectorXd h = lowpass_taps();
        for (int j = 0; j < std::min(lags, kLowpassOrder + 1); ++j) {
            double acc = 0;
            for (int k = 0; k + j <= kLowpassOrder; ++k) acc += h(k) * h(k + j);
            gamma(j) = acc;
        }
        return gamma;
    }
    const double a = rational_pole(kind);
    if (a >= 0) {
        // Autocovariance of sum_k (k+1) a^k w(t-k):
        // gamma(j) = a^j [ (1+a^2)/(1-a^2)^3 + j/(1-a^2)^2 ], then normalized.
        const double d = 1.0 - a * a;
        const double g0 = rational_gamma0(a);
        double aj = 1.0;
        for (int j = 0; j < lags; ++j) {
            gamma(j) = aj * (g0 + j / (d * d)) / g0;
            aj *= a;
        }
        return gamma;
    }
    throw ConfigError("unknown input kind: " + kind);
}

SimulatedData simulate_snr(const VectorXd& theta0, const VectorXd& u, double snr,
                           std::uint64_t noise_seed) {
    if (!(snr > 0)) throw DomainError("signal-to-noise ratio must be positive");
    const int n = static_cast<int>(theta0.size());
    const int N = static_cast<int>(u.size());
    if (n < 1) throw DimensionError("theta0 must be nonempty");

    const MatrixXd phi = build_regressor(u, n, N);
    const VectorXd z = phi * theta0;
    const double var_z = (z.array() - z.mean()).square().sum() / N;
    if (!(var_z > 0)) throw DomainError("noise-free output has zero variance");

    SimulatedData out;
    out.sigma2 = var_z / snr;
    out.snr = snr;
    std::mt19937_64 rng = make_rng(noise_seed, kSaltNoise);
    const VectorXd y = z + std::sqrt(out.sigma2) * standard_normal(N, rng);
    out.d = make_dataset(u, y, n, false);
    return out;
}

Dataset simulate_fixed_noise(const VectorXd& theta0, const VectorXd& u, double sigma2,
                             std::uint64_t noise_seed) {
    if (sigma2 < 0) throw DomainError("noise variance must be nonnegative");
    const int n = static_cast<int>(theta0.size());
    const int N = static_cast<int>(u.size());
    if (n < 1) throw DimensionError("theta0 must be nonempty");

    const MatrixXd phi = build_regressor(u, n, N);
    std::mt19937_64 rng = make_rng(noise_seed, kSaltNoise);
    const VectorXd y = phi * theta0 + std::sqrt(sigma2) * standard_normal(N, rng);
    return make_dataset(u, y, n, false);
}

}  // namespace regkern
