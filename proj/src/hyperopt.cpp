#include "regkern/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "regkern/model_core.hpp"
#include "regkern/rng.hpp"

namespace regkern {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
// A coordinate this close to its box floor is clamped onto the floor; the
// looser threshold below only flags boundary contact in the diagnostics.
constexpr double kSnapTol = 1e-7;
constexpr double kBoundaryTol = 1e-6;

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double s) { return std::log(s) - std::log1p(-s); }

bool grad_certified(double grad_norm, double f, double grad_tol) {
    return std::isfinite(grad_norm) && grad_norm <= grad_tol * (1.0 + std::abs(f));
}

/// Objective seen by the local solvers: transformed coordinates in,
/// infeasible trial points mapped to +inf, gradients transported through the
/// transform Jacobian. Counts value evaluations.
struct WrappedObjective {
    const BoxTransform& T;
    const std::function<double(const VectorXd&)>& value;
    const std::function<VectorXd(const VectorXd&)>& gradient;
    mutable long evals = 0;

    double f(const VectorXd& x) const {
        ++evals;
        try {
            const double v = value(T.to_eta(x));
            return std::isfinite(v) ? v : kInf;
        } catch (const InvalidKernelError&) {
            return kInf;
        } catch (const DomainError&) {
            return kInf;
        }
    }

    bool has_gradient() const { return static_cast<bool>(gradient); }

    /// Transformed-coordinate gradient: analytic when supplied, central
    /// finite differences otherwise.
    std::optional<VectorXd> g(const VectorXd& x) const {
        if (has_gradient()) {
            try {
                const VectorXd ge = gradient(T.to_eta(x));
                if (!ge.allFinite()) return std::nullopt;
                return VectorXd(T.jacobian(x).cwiseProduct(ge));
            } catch (const InvalidKernelError&) {
                return std::nullopt;
            } catch (const DomainError&) {
                return std::nullopt;
            }
        }
        VectorXd fd(x.size());
        for (int i = 0; i < x.size(); ++i) {
            const double h = 1e-6 * (1.0 + std::abs(x(i)));
            VectorXd xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            fd(i) = (f(xp) - f(xm)) / (2.0 * h);
        }
        if (!fd.allFinite()) return std::nullopt;
        return fd;
    }
};

struct LocalOutcome {
    VectorXd x;
    double f = kInf;
    double grad_norm = kInf;
    bool converged = false;
    int iters = 0;
    std::vector<double> accepted;
};

/// Quasi-newton descent with inverse-Hessian updates and Armijo
/// backtracking. Steps are capped in length so extreme transformed
/// coordinates are approached gradually.
LocalOutcome quasi_newton_solve(const WrappedObjective& W, VectorXd x,
                                const OptimizerConfig& cfg) {
    LocalOutcome out;
    out.x = x;
    const int p = static_cast<int>(x.size());
    double f = W.f(x);
    if (!std::isfinite(f)) return out;
    out.f = f;
    out.accepted.push_back(f);
    auto g0 = W.g(x);
    if (!g0) return out;
    VectorXd g = *g0;

    MatrixXd hinv = MatrixXd::Identity(p, p);
    bool fresh_hessian = true;
    for (int it = 0; it < cfg.max_iters; ++it) {
        out.iters = it + 1;
        // Iterate toward a hundredth of the certificate so the certified
        // point sits well inside the tolerance, not on its edge.
        if (grad_certified(g.norm(), f, 0.01 * cfg.grad_tol)) break;

        VectorXd d = -(hinv * g);
        double gd = g.dot(d);
        if (!(gd < 0) || !d.allFinite()) {
            hinv.setIdentity();
            fresh_hessian = true;
            d = -g;
            gd = g.dot(d);
        }
        const double dn = d.norm();
        if (dn > 10.0) {
            d *= 10.0 / dn;
            gd = g.dot(d);
        }

        double t = 1.0;
        bool step_accepted = false;
        double ft = kInf;
        VectorXd xt;
        for (int bt = 0; bt < 60; ++bt) {
            xt = x + t * d;
            ft = W.f(xt);
            if (ft <= f + 1e-4 * t * gd) {
                step_accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!step_accepted) break;

        const VectorXd s = t * d;
        auto gnew = W.g(xt);
        x = xt;
        f = ft;
        out.accepted.push_back(f);
        out.x = x;
        out.f = f;
        if (!gnew) break;
        const VectorXd y = *gnew - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh_hessian) {
                hinv *= sy / y.squaredNorm();
                fresh_hessian = false;
            }
            const double rho = 1.0 / sy;
            const MatrixXd a = MatrixXd::Identity(p, p) - rho * s * y.transpose();
            hinv = a * hinv * a.transpose() + rho * s * s.transpose();
        }
        g = *gnew;
        if (s.norm() <= cfg.step_tol * (1.0 + x.norm())) break;
    }

    auto gfin = W.g(out.x);
    if (gfin) {
        out.grad_norm = gfin->norm();
        out.converged = grad_certified(out.grad_norm, out.f, cfg.grad_tol);
    }
    return out;
}

/// Derivative-free simplex search. When an analytic gradient is available the
/// collapsed simplex is polished by quasi-newton steps, so the gradient-based
/// convergence certificate applies; otherwise the certificate falls back to a
/// central finite difference at the final point.
LocalOutcome simplex_solve(const WrappedObjective& W, const VectorXd& x0,
                           const OptimizerConfig& cfg) {
    const int p = static_cast<int>(x0.size());
    std::vector<VectorXd> v(p + 1, x0);
    for (int i = 0; i < p; ++i) v[i + 1](i) += 0.5;
    std::vector<double> fv(p + 1);
    for (int i = 0; i <= p; ++i) fv[i] = W.f(v[i]);
    std::vector<int> idx(p + 1);
    std::iota(idx.begin(), idx.end(), 0);
    auto reorder = [&] {
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    };
    reorder();

    LocalOutcome out;
    out.x = v[idx[0]];
    out.f = fv[idx[0]];
    if (std::isfinite(out.f)) out.accepted.push_back(out.f);

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        const int best = idx[0], worst = idx[p];
        if (!std::isfinite(fv[best])) break;
        if (std::isfinite(fv[worst]) &&
            fv[worst] - fv[best] <= cfg.step_tol * (1.0 + std::abs(fv[best])))
            break;
        double diameter = 0;
        for (int i = 0; i <= p; ++i) diameter = std::max(diameter, (v[i] - v[best]).norm());
        if (diameter <= cfg.step_tol * (1.0 + v[best].norm())) break;

        VectorXd centroid = VectorXd::Zero(p);
        for (int i = 0; i < p; ++i) centroid += v[idx[i]];
        centroid /= p;

        const VectorXd xr = centroid + (centroid - v[worst]);
        const double fr = W.f(xr);
        if (fr < fv[best]) {
            const VectorXd xe = centroid + 2.0 * (centroid - v[worst]);
            const double fe = W.f(xe);
            if (fe < fr) {
                v[worst] = xe;
                fv[worst] = fe;
            } else {
                v[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[idx[p - 1]]) {
            v[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const VectorXd xc = outside ? VectorXd(centroid + 0.5 * (centroid - v[worst]))
                                        : VectorXd(centroid - 0.5 * (centroid - v[worst]));
            const double fc = W.f(xc);
            if ((outside && fc <= fr) || (!outside && fc < fv[worst])) {
                v[worst] = xc;
                fv[worst] = fc;
            } else {
                for (int i = 1; i <= p; ++i) {
                    v[idx[i]] = v[idx[0]] + 0.5 * (v[idx[i]] - v[idx[0]]);
                    fv[idx[i]] = W.f(v[idx[i]]);
                }
            }
        }
        reorder();
        if (fv[idx[0]] < out.f) {
            out.f = fv[idx[0]];
            out.x = v[idx[0]];
            out.accepted.push_back(out.f);
        }
    }
    out.iters = it;
    if (!std::isfinite(out.f)) return out;

    // The simplex only localizes the minimum; quasi-newton polishing (with
    // finite-difference gradients when no analytic one exists) provides the
    // gradient-based convergence certificate.
    LocalOutcome polish = quasi_newton_solve(W, out.x, cfg);
    if (polish.f <= out.f) {
        for (size_t k = 1; k < polish.accepted.size(); ++k)
            out.accepted.push_back(polish.accepted[k]);
        out.x = polish.x;
        out.f = polish.f;
        out.grad_norm = polish.grad_norm;
        out.converged = polish.converged;
        out.iters += polish.iters;
    }
    return out;
}

void validate_config(const OptimizerConfig& cfg) {
    if (cfg.restarts < 1) throw ConfigError("optimizer restarts must be >= 1");
    if (cfg.max_iters < 1) throw ConfigError("optimizer max_iters must be >= 1");
    if (!(cfg.grad_tol > 0) || !(cfg.step_tol > 0))
        throw ConfigError("optimizer tolerances must be positive");
}

}  // namespace

std::string method_tag(OptimMethod m) {
    switch (m) {
        case OptimMethod::gradient_quasi_newton: return "gradient_quasi_newton";
        case OptimMethod::simplex_search: return "simplex_search";
    }
    throw ConfigError("unknown optimizer method");
}

OptimMethod method_from_tag(const std::string& tag) {
    if (tag == "gradient_quasi_newton") return OptimMethod::gradient_quasi_newton;
    if (tag == "simplex_search") return OptimMethod::simplex_search;
    throw ConfigError("unknown optimizer method tag: " + tag);
}

BoxTransform::BoxTransform(const Box& box) {
    if (box.empty()) throw DimensionError("feasible box must have at least one coordinate");
    for (const auto& interval : box) {
        const double lo = interval[0], hi = interval[1];
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
            throw ConfigError("feasible box interval must be a finite nonempty range");
        const bool use_log = lo > 0;
        log_mode_.push_back(use_log);
        raw_lo_.push_back(lo);
        raw_hi_.push_back(hi);
        const double tlo = use_log ? std::log(lo) : lo;
        const double thi = use_log ? std::log(hi) : hi;
        lo_.push_back(tlo);
        hi_.push_back(thi);
        const double width = thi - tlo;
        if (use_log) {
            // exp(log(end) +/- offset) must clear `end` despite the rounding
            // of log(), whose absolute error grows with |log(end)|.
            auto margin = [&](double tend) {
                return 4.0 * kEps * (1.0 + std::abs(tend)) / width;
            };
            clamp_lo_.push_back(margin(tlo));
            clamp_hi_.push_back(margin(thi));
        } else {
            // The sum lo + width*s must exceed lo (and stay below hi) in
            // double arithmetic; a floor at exactly zero needs no margin.
            auto margin = [&](double end) {
                return end == 0.0 ? 1e-300 : 8.0 * kEps * std::abs(end) / width;
            };
            clamp_lo_.push_back(margin(lo));
            clamp_hi_.push_back(margin(hi));
        }
    }
}

VectorXd BoxTransform::to_eta(const VectorXd& x) const {
    if (x.size() != dim()) throw DimensionError("transform input has wrong length");
    VectorXd eta(dim());
    for (int i = 0; i < dim(); ++i) {
        const double width = hi_[i] - lo_[i];
        // Work from the nearer interval end so tail resolution is limited by
        // the logistic itself, not by cancellation against the far end.
        double y;
        if (x(i) <= 0) {
            const double s = std::max(logistic(x(i)), clamp_lo_[i]);
            y = lo_[i] + width * s;
        } else {
            const double s = std::max(logistic(-x(i)), clamp_hi_[i]);
            y = hi_[i] - width * s;
        }
        double e = log_mode_[i] ? std::exp(y) : y;
        // Rounding may still land exactly on a bound; force strict interiority
        // in the original coordinates.
        if (!(e > raw_lo_[i])) e = std::nextafter(raw_lo_[i], raw_hi_[i]);
        if (!(e < raw_hi_[i])) e = std::nextafter(raw_hi_[i], raw_lo_[i]);
        eta(i) = e;
    }
    return eta;
}

VectorXd BoxTransform::to_x(const VectorXd& eta) const {
    if (eta.size() != dim()) throw DimensionError("transform input has wrong length");
    VectorXd x(dim());
    for (int i = 0; i < dim(); ++i) {
        if (!std::isfinite(eta(i))) throw DomainError("transform input has non-finite entries");
        const double width = hi_[i] - lo_[i];
        const double y = log_mode_[i] ? std::log(std::max(eta(i), raw_lo_[i])) : eta(i);
        const double f_lo = (y - lo_[i]) / width;
        const double f_hi = (hi_[i] - y) / width;
        if (f_lo <= f_hi) {
            x(i) = logit(std::min(0.5, std::max(f_lo, clamp_lo_[i])));
        } else {
            x(i) = -logit(std::min(0.5, std::max(f_hi, clamp_hi_[i])));
        }
    }
    return x;
}

VectorXd BoxTransform::jacobian(const VectorXd& x) const {
    if (x.size() != dim()) throw DimensionError("transform input has wrong length");
    VectorXd j(dim());
    for (int i = 0; i < dim(); ++i) {
        const double width = hi_[i] - lo_[i];
        const double near = x(i) <= 0 ? std::max(logistic(x(i)), clamp_lo_[i])
                                      : std::max(logistic(-x(i)), clamp_hi_[i]);
        const double far = 1.0 - near;
        const double dy_dx = width * near * far;
        if (log_mode_[i]) {
            const double y = x(i) <= 0 ? lo_[i] + width * near : hi_[i] - width * near;
            j(i) = std::exp(y) * dy_dx;
        } else {
            j(i) = dy_dx;
        }
    }
    return j;
}

BoxMinimum minimize_over_box(const std::function<double(const VectorXd&)>& value,
                             const std::function<VectorXd(const VectorXd&)>& gradient,
                             const Box& box, const std::vector<VectorXd>& warm_starts,
                             const OptimizerConfig& cfg) {
    validate_config(cfg);
    if (!value) throw ConfigError("minimize_over_box requires an objective");
    const BoxTransform transform(box);
    const int p = transform.dim();

    std::vector<VectorXd> starts;
    for (const VectorXd& w : warm_starts) {
        if (w.size() != p) throw DimensionError("warm start has wrong length");
        VectorXd clamped(p);
        for (int i = 0; i < p; ++i) {
            if (!std::isfinite(w(i))) throw DomainError("warm start has non-finite entries");
            clamped(i) = std::min(box[i][1], std::max(box[i][0], w(i)));
        }
        starts.push_back(transform.to_x(clamped));
    }
    // Latin-hypercube placement in the transformed coordinates: each
    // dimension is stratified into cfg.restarts bins visited in a random
    // permutation, giving well-spread deterministic starts.
    {
        const int K = cfg.restarts;
        auto rng = make_rng(cfg.seed, 0x1a7c);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<std::vector<int>> perms(p);
        for (int i = 0; i < p; ++i) {
            perms[i].resize(K);
            std::iota(perms[i].begin(), perms[i].end(), 0);
            std::shuffle(perms[i].begin(), perms[i].end(), rng);
        }
        for (int k = 0; k < K; ++k) {
            VectorXd x(p);
            for (int i = 0; i < p; ++i) {
                const double s = (perms[i][k] + unif(rng)) / K;
                x(i) = logit(std::min(1.0 - 1e-12, std::max(1e-12, s)));
            }
            starts.push_back(x);
        }
    }
    const int S = static_cast<int>(starts.size());

    const OptimMethod method =
        cfg.method.value_or(p <= 3 ? OptimMethod::simplex_search
                                   : OptimMethod::gradient_quasi_newton);

    std::vector<LocalOutcome> outcomes(S);
    std::vector<long> evals(S, 0);
    std::vector<std::exception_ptr> errors(S);
    bool in_parallel = false;
#ifdef _OPENMP
    in_parallel = omp_in_parallel() != 0;
#endif
#pragma omp parallel for schedule(dynamic) if (S > 1 && !in_parallel)
    for (int s = 0; s < S; ++s) {
        try {
            WrappedObjective w{transform, value, gradient};
            outcomes[s] = method == OptimMethod::gradient_quasi_newton
                              ? quasi_newton_solve(w, starts[s], cfg)
                              : simplex_solve(w, starts[s], cfg);
            evals[s] = w.evals;
        } catch (...) {
            errors[s] = std::current_exception();
        }
    }
    for (int s = 0; s < S; ++s)
        if (errors[s]) std::rethrow_exception(errors[s]);

    long total_evals = std::accumulate(evals.begin(), evals.end(), 0L);

    int best = -1;
    for (int s = 0; s < S; ++s) {
        if (!outcomes[s].converged || !std::isfinite(outcomes[s].f)) continue;
        if (best < 0) {
            best = s;
            continue;
        }
        const double tie = 1e-12 * std::max(1.0, std::abs(outcomes[best].f));
        if (outcomes[s].f < outcomes[best].f - tie)
            best = s;
        else if (std::abs(outcomes[s].f - outcomes[best].f) <= tie &&
                 outcomes[s].x.norm() < outcomes[best].x.norm())
            best = s;
    }
    if (best < 0) {
        int fallback = 0;
        for (int s = 1; s < S; ++s)
            if (outcomes[s].f < outcomes[fallback].f) fallback = s;
        const VectorXd eta = outcomes[fallback].x.size() == p
                                 ? transform.to_eta(outcomes[fallback].x)
                                 : VectorXd::Zero(p);
        throw NonConvergenceError("no optimizer restart reached the convergence tolerance", eta,
                                  outcomes[fallback].f);
    }

    const LocalOutcome& win = outcomes[best];
    VectorXd eta = transform.to_eta(win.x);
    double best_value = win.f;
    bool boundary = false;
    bool snapped = false;
    for (int i = 0; i < p; ++i) {
        const double lo = box[i][0], hi = box[i][1];
        if (eta(i) - lo <= kBoundaryTol * std::max(1.0, std::abs(lo)) ||
            hi - eta(i) <= kBoundaryTol * std::max(1.0, std::abs(hi)))
            boundary = true;
        if (eta(i) - lo <= kSnapTol * std::max(1.0, std::abs(lo))) {
            eta(i) = lo;
            snapped = true;
        }
    }
    if (snapped) {
        bool keep = false;
        try {
            const double fs = value(eta);
            ++total_evals;
            if (std::isfinite(fs)) {
                best_value = fs;
                keep = true;
            }
        } catch (const InvalidKernelError&) {
        } catch (const DomainError&) {
        }
        if (!keep) eta = transform.to_eta(win.x);
    }

    BoxMinimum result;
    result.eta = eta;
    result.x = win.x;
    result.value = best_value;
    result.diagnostics.iterations = win.iters;
    result.diagnostics.restarts = S;
    result.diagnostics.function_evals = total_evals;
    result.diagnostics.converged = true;
    result.diagnostics.boundary = boundary;
    result.diagnostics.grad_norm = win.grad_norm;
    result.diagnostics.accepted_values = win.accepted;
    return result;
}

namespace {

/// Data-driven starting point: overall scale from the LS estimate when the
/// Gram matrix permits one (output energy otherwise), mild decay, zero
/// correlation.
VectorXd heuristic_warm_start(const KernelSpec& spec, const DatasetCache& cache) {
    const int p = family_param_count(spec.family, spec.n);
    const bool have_ls = cache.gram_invertible && cache.theta_ls.size() == spec.n;
    const double scale = have_ls
                             ? cache.theta_ls.squaredNorm() / spec.n
                             : cache.yTy / (static_cast<double>(std::max(1, cache.N)) *
                                            std::max(1, cache.n));
    VectorXd eta(p);
    switch (spec.family) {
        case KernelFamily::TC:
        case KernelFamily::SS:
            eta << scale, 0.9;
            break;
        case KernelFamily::DC:
            eta << scale, 0.9, 0.0;
            break;
        case KernelFamily::Ridge:
            eta << scale;
            break;
        case KernelFamily::Diagonal:
            for (int i = 0; i < p; ++i)
                eta(i) = have_ls ? cache.theta_ls(i) * cache.theta_ls(i) : scale;
            break;
    }
    return eta;
}

}  // namespace

EstimateReport estimate_hyperparameter(CriterionKind kind, const KernelSpec& spec,
                                       DatasetCachePtr cache, double sigma2,
                                       const VectorXd* theta0, const OptimizerConfig& cfg) {
    if (!cache) throw ConfigError("estimate_hyperparameter requires a dataset cache");
    if (!(sigma2 > 0)) throw DomainError("noise variance must be positive");
    if (spec.n != cache->n)
        throw DimensionError("kernel spec order does not match the dataset");
    if (criterion_is_oracle(kind) != (theta0 != nullptr))
        throw DomainError("theta0 must be supplied exactly for oracle criteria");
    if (theta0 && theta0->size() != cache->n)
        throw DimensionError("theta0 has wrong length");
    if (kind == CriterionKind::SUREg && !cache->gram_invertible)
        throw IllConditionedError("SUREg requires an invertible Gram matrix", cache->cond_gram);

    auto objective = [kind, spec, cache, sigma2, theta0](const VectorXd& eta) {
        KernelSpec s = spec;
        s.eta = eta;
        const MatrixXd P = kernel_matrix(s);
        const DerivedQuantities dq = derived_quantities(P, cache, sigma2, DeriveDepth::light);
        return criterion_value(kind, dq, theta0);
    };
    auto gradient = [kind, spec, cache, sigma2, theta0](const VectorXd& eta) {
        KernelSpec s = spec;
        s.eta = eta;
        return criterion_grad_eta(kind, s, cache, sigma2, theta0);
    };

    const std::vector<VectorXd> warm{heuristic_warm_start(spec, *cache)};
    const BoxMinimum m = minimize_over_box(objective, gradient, spec.omega, warm, cfg);

    EstimateReport report;
    report.criterion = criterion_tag(kind);
    report.family = family_tag(spec.family);
    report.eta_hat = m.eta;
    report.criterion_value = m.value;
    KernelSpec fitted = spec;
    fitted.eta = m.eta;
    const MatrixXd P = kernel_matrix(fitted);
    report.theta_hat = derived_quantities(P, cache, sigma2, DeriveDepth::light).theta_r;
    if (theta0) {
        try {
            report.fit = fit_metric(report.theta_hat, *theta0);
        } catch (const UndefinedFitError&) {
        }
    }
    report.diagnostics = m.diagnostics;
    return report;
}

EstimateReport estimate_hyperparameter(CriterionKind kind, const KernelSpec& spec,
                                       const Dataset& d, double sigma2, const VectorXd* theta0,
                                       const OptimizerConfig& cfg) {
    return estimate_hyperparameter(kind, spec, make_dataset_cache(d), sigma2, theta0, cfg);
}

double closed_form_ridge(const VectorXd& theta_ls, int n, int N, double sigma2) {
    if (n < 1 || theta_ls.size() != n)
        throw DimensionError("closed_form_ridge: theta_ls must have length n >= 1");
    if (N < 1) throw DimensionError("closed_form_ridge: N must be >= 1");
    if (sigma2 < 0) throw DomainError("closed_form_ridge: sigma2 must be nonnegative");
    return std::max(0.0, theta_ls.squaredNorm() / n - sigma2 / N);
}

VectorXd closed_form_diagonal(const VectorXd& theta_ls, int N, double sigma2) {
    if (theta_ls.size() < 1) throw DimensionError("closed_form_diagonal: empty theta_ls");
    if (N < 1) throw DimensionError("closed_form_diagonal: N must be >= 1");
    if (sigma2 < 0) throw DomainError("closed_form_diagonal: sigma2 must be nonnegative");
    return (theta_ls.array().square() - sigma2 / N).max(0.0).matrix();
}

VectorXd closed_form_diagonal_oracle(const VectorXd& theta0) {
    return theta0.array().square().matrix();
}

MatrixXd optimal_unconstrained_kernel(const VectorXd& theta0) {
    return theta0 * theta0.transpose();
}

double orthonormality_defect(const Dataset& d) {
    if (d.N < 1 || d.n < 1) throw DimensionError("orthonormality_defect: empty dataset");
    const MatrixXd gram = d.phi.transpose() * d.phi;
    const MatrixXd deviation =
        gram - static_cast<double>(d.N) * MatrixXd::Identity(d.n, d.n);
    return deviation.cwiseAbs().maxCoeff() / static_cast<double>(d.N);
}

}  // namespace regkern
