#include "regkern/asymptotics.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <random>
#include <utility>

#include "regkern/bench.hpp"
#include "regkern/errors.hpp"
#include "regkern/linalg.hpp"
#include "regkern/rng.hpp"

namespace regkern {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_limit_spec(const LimitSpec& ls, bool need_family) {
    const Eigen::Index n = ls.theta0.size();
    if (n < 1) throw DimensionError("limit spec requires a nonempty theta0");
    if (ls.Sigma.rows() != n || ls.Sigma.cols() != n)
        throw DimensionError("limit covariance dimensions do not match theta0");
    if (!ls.theta0.allFinite() || !all_finite(ls.Sigma))
        throw DomainError("limit spec contains non-finite values");
    if (!is_symmetric(ls.Sigma)) throw DomainError("limit covariance must be symmetric");
    if (!(ls.sigma2 > 0)) throw DomainError("noise variance must be positive");
    if (need_family && ls.family.n != static_cast<int>(n))
        throw DimensionError("kernel family order does not match theta0");
}

MatrixXd sigma_inverse(const MatrixXd& Sigma) {
    Eigen::LLT<MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success)
        throw DomainError("limit covariance must be positive definite");
    return llt.solve(MatrixXd::Identity(Sigma.rows(), Sigma.cols()));
}

// Inverse of P behind a conditioning gate. P may be slightly asymmetric
// (elementwise finite-difference probes); the gate looks at the symmetric
// part while the inverse is taken on P itself.
MatrixXd p_inverse(const MatrixXd& P, Eigen::Index n) {
    if (P.rows() != n || P.cols() != n)
        throw DimensionError("kernel matrix dimensions do not match theta0");
    if (!all_finite(P)) throw DomainError("kernel matrix has non-finite entries");
    const double cond = condition_estimate(symmetric_part(P));
    if (!(cond < kConditionLimit))
        throw IllConditionedError("kernel matrix too ill-conditioned for the limit functional",
                                  cond);
    return Eigen::PartialPivLU<MatrixXd>(P).inverse();
}

/// ls.family with its box populated and eta replaced by a valid interior
/// point when the caller left it unset.
KernelSpec family_descriptor(const LimitSpec& ls) {
    KernelSpec spec = ls.family;
    const int p = family_param_count(spec.family, spec.n);
    if (spec.omega.size() != static_cast<size_t>(p)) spec.omega = default_omega(spec.family, spec.n);
    if (spec.eta.size() != p) spec.eta = neutral_eta(spec.family, spec.n);
    return spec;
}

}  // namespace

std::string limit_tag(LimitKind k) {
    switch (k) {
        case LimitKind::g: return "g";
        case LimitKind::y: return "y";
        case LimitKind::B: return "B";
    }
    throw ConfigError("unknown limit kind");
}

LimitKind limit_from_tag(const std::string& tag) {
    if (tag == "g") return LimitKind::g;
    if (tag == "y") return LimitKind::y;
    if (tag == "B" || tag == "b") return LimitKind::B;
    throw ConfigError("unknown limit tag: " + tag);
}

LimitKind matching_limit(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::MSEg:
        case CriterionKind::SUREg: return LimitKind::g;
        case CriterionKind::MSEy:
        case CriterionKind::SUREy: return LimitKind::y;
        case CriterionKind::EEB:
        case CriterionKind::EB: return LimitKind::B;
    }
    throw ConfigError("unknown criterion kind");
}

double w_g(const MatrixXd& P, const LimitSpec& ls) {
    check_limit_spec(ls, false);
    const MatrixXd Sinv = sigma_inverse(ls.Sigma);
    const MatrixXd Pinv = p_inverse(P, ls.theta0.size());
    const double s4 = ls.sigma2 * ls.sigma2;
    const VectorXd u = Pinv * ls.theta0;
    // Tr(Sigma^-1 P^-1 Sigma^-1) = Tr(Sigma^-2 P^-1) by trace cyclicity.
    const double tr = (Sinv * Sinv).cwiseProduct(Pinv.transpose()).sum();
    return s4 * (Sinv * u).squaredNorm() - 2.0 * s4 * tr;
}

double w_y(const MatrixXd& P, const LimitSpec& ls) {
    check_limit_spec(ls, false);
    const MatrixXd Sinv = sigma_inverse(ls.Sigma);
    const MatrixXd Pinv = p_inverse(P, ls.theta0.size());
    const double s4 = ls.sigma2 * ls.sigma2;
    const VectorXd u = Pinv * ls.theta0;
    const double tr = Sinv.cwiseProduct(Pinv.transpose()).sum();
    return s4 * u.dot(Sinv * u) - 2.0 * s4 * tr;
}

double w_b(const MatrixXd& P, const VectorXd& theta0) {
    if (theta0.size() < 1) throw DimensionError("w_b requires a nonempty theta0");
    if (!theta0.allFinite()) throw DomainError("w_b requires finite theta0");
    const MatrixXd Pinv = p_inverse(P, theta0.size());
    bool positive = true;
    const double ld = logdet_lu(P, &positive);
    if (!positive) throw DomainError("w_b requires a kernel matrix with positive determinant");
    return theta0.dot(Pinv * theta0) + ld;
}

double limit_value(LimitKind kind, const MatrixXd& P, const LimitSpec& ls) {
    switch (kind) {
        case LimitKind::g: return w_g(P, ls);
        case LimitKind::y: return w_y(P, ls);
        case LimitKind::B: check_limit_spec(ls, false); return w_b(P, ls.theta0);
    }
    throw ConfigError("unknown limit kind");
}

MatrixXd limit_grad_P(LimitKind kind, const MatrixXd& P, const LimitSpec& ls) {
    check_limit_spec(ls, false);
    const MatrixXd Pinv = p_inverse(P, ls.theta0.size());
    const MatrixXd Pit = Pinv.transpose();
    const VectorXd u = Pinv * ls.theta0;
    if (kind == LimitKind::B) return Pit - (Pit * ls.theta0) * u.transpose();
    const MatrixXd Sinv = sigma_inverse(ls.Sigma);
    const double s4 = ls.sigma2 * ls.sigma2;
    const MatrixXd W = (kind == LimitKind::g) ? MatrixXd(Sinv * Sinv) : Sinv;
    return 2.0 * s4 * (Pit * W * Pit - (Pit * (W * u)) * u.transpose());
}

VectorXd limit_eta(LimitKind kind, const LimitSpec& ls, const OptimizerConfig& cfg) {
    check_limit_spec(ls, true);
    const KernelSpec spec = family_descriptor(ls);
    const int p = family_param_count(spec.family, spec.n);

    auto with_eta = [spec](const VectorXd& eta) {
        KernelSpec s = spec;
        s.eta = eta;
        return s;
    };
    // An ill-conditioned trial kernel is infeasible for the functional, not a
    // caller error; translate so the search treats the point as out of bounds.
    auto value = [kind, with_eta, &ls](const VectorXd& eta) -> double {
        try {
            return limit_value(kind, kernel_matrix(with_eta(eta)), ls);
        } catch (const IllConditionedError&) {
            throw InvalidKernelError("trial kernel is singular for the limit functional");
        }
    };
    auto gradient = [kind, with_eta, &ls, p](const VectorXd& eta) -> VectorXd {
        try {
            const KernelSpec s = with_eta(eta);
            const MatrixXd gp = limit_grad_P(kind, kernel_matrix(s), ls);
            VectorXd g(p);
            for (int i = 0; i < p; ++i) g(i) = gp.cwiseProduct(kernel_gradient(s, i)).sum();
            return g;
        } catch (const IllConditionedError&) {
            throw InvalidKernelError("trial kernel is singular for the limit functional");
        }
    };

    // Warm start at the marginal-likelihood ridge scale of theta0.
    const double scale = std::max(ls.theta0.squaredNorm() / spec.n, 1e-6);
    VectorXd warm;
    switch (spec.family) {
        case KernelFamily::TC:
        case KernelFamily::SS: warm = (VectorXd(2) << scale, 0.9).finished(); break;
        case KernelFamily::DC: warm = (VectorXd(3) << scale, 0.9, 0.0).finished(); break;
        case KernelFamily::Ridge: warm = VectorXd::Constant(1, scale); break;
        case KernelFamily::Diagonal: warm = ls.theta0.array().square(); break;
    }
    for (int i = 0; i < p; ++i)
        warm(i) = std::clamp(warm(i), spec.omega[i][0], spec.omega[i][1]);

    return minimize_over_box(value, gradient, spec.omega, {warm}, cfg).eta;
}

VectorXd stationarity_residual(LimitKind kind, const VectorXd& eta, const LimitSpec& ls) {
    check_limit_spec(ls, true);
    KernelSpec spec = family_descriptor(ls);
    spec.eta = eta;
    const MatrixXd P = kernel_matrix(spec);
    const MatrixXd Pinv = p_inverse(P, ls.theta0.size());

    MatrixXd lead;
    switch (kind) {
        case LimitKind::g: {
            const MatrixXd Sinv = sigma_inverse(ls.Sigma);
            lead = Pinv * Sinv * Sinv * Pinv;
            break;
        }
        case LimitKind::y: {
            const MatrixXd Sinv = sigma_inverse(ls.Sigma);
            lead = Pinv * Sinv * Pinv;
            break;
        }
        case LimitKind::B: lead = Pinv; break;
    }
    const MatrixXd M = lead * (P - ls.theta0 * ls.theta0.transpose()) * Pinv;

    const int p = family_param_count(spec.family, spec.n);
    VectorXd r(p);
    for (int i = 0; i < p; ++i)
        r(i) = M.cwiseProduct(kernel_gradient(spec, i).transpose()).sum();
    return r;
}

double shifted_criterion(CriterionKind kind, const MatrixXd& P, DatasetCachePtr cache,
                         double sigma2, const VectorXd* theta0) {
    const DatasetCache& c = *cache;
    if (!c.gram_invertible)
        throw IllConditionedError("shifted criteria require an invertible Gram matrix",
                                  c.cond_gram);
    const double value =
        criterion_value(kind, derived_quantities(P, cache, sigma2, DeriveDepth::light), theta0);
    const double N = c.N, n = c.n;
    switch (kind) {
        case CriterionKind::MSEg:
        case CriterionKind::SUREg:
            return N * N * (value - sigma2 * c.trace_gram_inverse());
        case CriterionKind::MSEy: return N * (value - (n + N) * sigma2);
        case CriterionKind::SUREy:
            return N * (value + c.phiTy.dot(c.theta_ls) - c.yTy - 2.0 * n * sigma2);
        case CriterionKind::EEB:
            return value - (N - n) - (N - n) * std::log(sigma2) - c.logdet_gram;
        case CriterionKind::EB:
            return value + (c.phiTy.dot(c.theta_ls) - c.yTy) / sigma2 -
                   (N - n) * std::log(sigma2) - c.logdet_gram;
    }
    throw ConfigError("unknown criterion kind");
}

double shifted_criterion(CriterionKind kind, const MatrixXd& P, const Dataset& d, double sigma2,
                         const VectorXd* theta0) {
    return shifted_criterion(kind, P, make_dataset_cache(d), sigma2, theta0);
}

MatrixXd toeplitz(const VectorXd& gamma) {
    const Eigen::Index n = gamma.size();
    if (n < 1) throw DimensionError("toeplitz requires at least one coefficient");
    if (!gamma.allFinite()) throw DomainError("toeplitz requires finite coefficients");
    MatrixXd T(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) T(i, j) = gamma(std::abs(i - j));
    return T;
}

MatrixXd input_sigma(const std::string& kind, int n) {
    return toeplitz(input_autocovariance(kind, n));
}

// ---------------------------------------------------------------------------
// Convergence-rate experiment
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<CriterionKind, 6> kSeriesOrder{CriterionKind::MSEg, CriterionKind::SUREg,
                                                    CriterionKind::MSEy, CriterionKind::SUREy,
                                                    CriterionKind::EEB,  CriterionKind::EB};
struct ContrastDef {
    const char* tag;
    int a, b;  ///< indices into kSeriesOrder
};
constexpr std::array<ContrastDef, 3> kContrasts{{{"SUREg-MSEg", 1, 0},
                                                 {"SUREy-MSEy", 3, 2},
                                                 {"EEB-EB", 4, 5}}};

struct RateItem {
    bool ok = false;
    std::array<VectorXd, 6> eta;
};

double median_of(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Least-squares slope of log(median) against log(N) over the grid points
/// with positive finite medians; NaN when fewer than two qualify.
double loglog_slope(const std::vector<int>& N_grid, const std::vector<double>& med) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < N_grid.size(); ++i) {
        if (!(med[i] > 0) || !std::isfinite(med[i])) continue;
        const double x = std::log(static_cast<double>(N_grid[i]));
        const double y = std::log(med[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    const double det = m * sxx - sx * sx;
    if (m < 2 || !(det > 0)) return kNaN;
    return (m * sxy - sx * sy) / det;
}

RateResult rate_impl(const LimitSpec& ls, const std::string& input_kind,
                     const std::vector<int>& N_grid, int replicates, std::uint64_t seed,
                     const OptimizerConfig& opt, bool parallel) {
    check_limit_spec(ls, true);
    const KernelSpec spec = family_descriptor(ls);
    if (N_grid.size() < 3) throw ConfigError("rate experiment requires at least 3 grid sizes");
    for (std::size_t i = 0; i < N_grid.size(); ++i) {
        if (N_grid[i] <= spec.n)
            throw ConfigError("rate experiment grid sizes must exceed the model order");
        if (i > 0 && N_grid[i] <= N_grid[i - 1])
            throw ConfigError("rate experiment grid sizes must be strictly increasing");
    }
    if (replicates < 20) throw ConfigError("rate experiment requires at least 20 replicates");

    RateResult out;
    out.N_grid = N_grid;
    for (CriterionKind k : kSeriesOrder) out.kinds.push_back(criterion_tag(k));
    for (const ContrastDef& cd : kContrasts) out.kinds.push_back(cd.tag);

    out.eta_star["g"] = limit_eta(LimitKind::g, ls, opt);
    out.eta_star["y"] = limit_eta(LimitKind::y, ls, opt);
    out.eta_star["B"] = limit_eta(LimitKind::B, ls, opt);

    const int G = static_cast<int>(N_grid.size());
    const int items = G * replicates;
    std::vector<RateItem> results(items);
    std::vector<std::exception_ptr> failures(items);

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int it = 0; it < items; ++it) {
        try {
            const int gi = it / replicates;
            const int N = N_grid[gi];
            // One input realization per grid size, shared by all replicates at
            // that size; replication varies the noise only.  This keeps the
            // regression design on its deterministic trajectory, so the
            // oracle-criterion series reflect the criterion's own convergence
            // instead of sample-covariance fluctuations.
            const VectorXd u = generate_input(input_kind, N, derive_stream(seed, gi, 0));
            const Dataset d =
                simulate_fixed_noise(ls.theta0, u, ls.sigma2, derive_stream(seed, it, 1));
            const DatasetCachePtr cache = make_dataset_cache(d);
            OptimizerConfig c = opt;
            c.seed = derive_stream(seed, it, 2);
            RateItem item;
            item.ok = true;
            for (int e = 0; e < 6 && item.ok; ++e) {
                const CriterionKind kind = kSeriesOrder[e];
                const VectorXd* t0 = criterion_is_oracle(kind) ? &ls.theta0 : nullptr;
                try {
                    item.eta[e] = estimate_hyperparameter(kind, spec, cache, ls.sigma2, t0, c).eta_hat;
                } catch (const NonConvergenceError&) {
                    item.ok = false;
                } catch (const IllConditionedError&) {
                    item.ok = false;
                }
            }
            results[it] = std::move(item);
        } catch (...) {
            failures[it] = std::current_exception();
        }
    }
    for (int it = 0; it < items; ++it)
        if (failures[it]) std::rethrow_exception(failures[it]);

    // Per-series errors over the replicates that survived every estimator,
    // so all nine series are computed on identical replicate sets.
    const int S = static_cast<int>(out.kinds.size());
    std::vector<std::vector<std::vector<double>>> errs(
        S, std::vector<std::vector<double>>(G));
    std::vector<std::vector<int>> survivors(G);
    for (int gi = 0; gi < G; ++gi) {
        for (int r = 0; r < replicates; ++r) {
            const RateItem& item = results[gi * replicates + r];
            if (!item.ok) {
                ++out.dropped;
                continue;
            }
            survivors[gi].push_back(r);
            for (int e = 0; e < 6; ++e) {
                const VectorXd& star = out.eta_star.at(limit_tag(matching_limit(kSeriesOrder[e])));
                errs[e][gi].push_back((item.eta[e] - star).norm());
            }
            for (std::size_t ci = 0; ci < kContrasts.size(); ++ci)
                errs[6 + ci][gi].push_back(
                    (item.eta[kContrasts[ci].a] - item.eta[kContrasts[ci].b]).norm());
        }
    }

    for (int s = 0; s < S; ++s) {
        std::vector<double> med(G);
        for (int gi = 0; gi < G; ++gi) {
            med[gi] = median_of(errs[s][gi]);
            for (std::size_t i = 0; i < survivors[gi].size(); ++i)
                out.rows.push_back({out.kinds[s], N_grid[gi], survivors[gi][i], errs[s][gi][i]});
        }
        out.fitted_slope[out.kinds[s]] = loglog_slope(N_grid, med);
        out.median_errors[out.kinds[s]] = std::move(med);
    }

    // Percentile bootstrap over replicates, after the deterministic
    // reduction so parallel and serial runs agree byte for byte.
    constexpr int kBoot = 1000;
    auto rng = make_rng(seed, 0x424f4f54ULL /* dedicated bootstrap stream */, 1);
    for (int s = 0; s < S; ++s) {
        std::vector<double> slopes;
        slopes.reserve(kBoot);
        for (int b = 0; b < kBoot; ++b) {
            std::vector<double> med(G);
            for (int gi = 0; gi < G; ++gi) {
                const std::vector<double>& pool = errs[s][gi];
                if (pool.empty()) {
                    med[gi] = kNaN;
                    continue;
                }
                std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
                std::vector<double> sample(pool.size());
                for (double& v : sample) v = pool[pick(rng)];
                med[gi] = median_of(std::move(sample));
            }
            const double sl = loglog_slope(N_grid, med);
            if (std::isfinite(sl)) slopes.push_back(sl);
        }
        if (slopes.size() < 100) {
            out.slope_ci[out.kinds[s]] = {kNaN, kNaN};
            continue;
        }
        std::sort(slopes.begin(), slopes.end());
        auto quantile = [&](double q) {
            const double pos = q * (slopes.size() - 1);
            return slopes[static_cast<std::size_t>(std::llround(pos))];
        };
        out.slope_ci[out.kinds[s]] = {quantile(0.025), quantile(0.975)};
    }
    return out;
}

}  // namespace

RateResult convergence_rate_experiment(const LimitSpec& ls, const std::string& input_kind,
                                       const std::vector<int>& N_grid, int replicates,
                                       std::uint64_t seed, const OptimizerConfig& opt) {
    return rate_impl(ls, input_kind, N_grid, replicates, seed, opt, /*parallel=*/true);
}

RateResult convergence_rate_experiment_serial(const LimitSpec& ls, const std::string& input_kind,
                                              const std::vector<int>& N_grid, int replicates,
                                              std::uint64_t seed, const OptimizerConfig& opt) {
    return rate_impl(ls, input_kind, N_grid, replicates, seed, opt, /*parallel=*/false);
}

void write_rate_csv(const RateResult& r, std::ostream& os) {
    os << "kind,N,replicate,error\n";
    os.precision(std::numeric_limits<double>::max_digits10);
    for (const RateRow& row : r.rows)
        os << row.kind << ',' << row.N << ',' << row.replicate << ',' << row.error << '\n';
}

std::string rate_summary_json(const RateResult& r) {
    nlohmann::json j;
    j["N_grid"] = r.N_grid;
    j["dropped"] = r.dropped;
    for (const auto& [tag, v] : r.eta_star)
        j["eta_star"][tag] = std::vector<double>(v.data(), v.data() + v.size());
    for (const std::string& kind : r.kinds) {
        nlohmann::json& s = j["series"][kind];
        s["median_errors"] = r.median_errors.at(kind);
        s["slope"] = r.fitted_slope.at(kind);
        const auto& ci = r.slope_ci.at(kind);
        s["slope_ci"] = {ci[0], ci[1]};
    }
    return j.dump(2);
}

}  // namespace regkern
