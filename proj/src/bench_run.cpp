#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "regkern/bench.hpp"
#include "regkern/errors.hpp"
#include "regkern/model_core.hpp"
#include "regkern/rng.hpp"

namespace regkern {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::array<CriterionKind, 6> kDefaultEstimators{
    CriterionKind::MSEg, CriterionKind::SUREg, CriterionKind::MSEy,
    CriterionKind::SUREy, CriterionKind::EEB,  CriterionKind::EB};

std::vector<CriterionKind> effective_estimators(const ExperimentConfig& cfg) {
    if (cfg.estimators.empty())
        return {kDefaultEstimators.begin(), kDefaultEstimators.end()};
    std::vector<CriterionKind> out;
    out.reserve(cfg.estimators.size());
    for (const std::string& tag : cfg.estimators) out.push_back(criterion_from_tag(tag));
    return out;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.num_systems < 1) throw ConfigError("num_systems must be at least 1");
    if (cfg.system_order < 1) throw ConfigError("system_order must be at least 1");
    if (cfg.fir_n < 1) throw ConfigError("fir_n must be at least 1");
    if (cfg.N <= cfg.fir_n) throw ConfigError("N must exceed fir_n");
    if (!(cfg.snr_range[0] > 0) || !(cfg.snr_range[1] >= cfg.snr_range[0]))
        throw ConfigError("snr_range must satisfy 0 < low <= high");
    family_from_tag(cfg.kernel_family);       // rejects unknown family tags
    input_autocovariance(cfg.input_kind, 1);  // rejects unknown input kinds
    effective_estimators(cfg);                // rejects unknown estimator tags
}

/// All work for one simulated system: generate, simulate at a drawn SNR, and
/// run every requested estimator. Failures become records with a NaN fit and
/// an error tag rather than aborting the experiment.
std::vector<RunRecord> run_system(const ExperimentConfig& cfg,
                                  const std::vector<CriterionKind>& kinds,
                                  const KernelSpec& family, int i) {
    const SystemTruth sys =
        generate_test_system(cfg.system_order, cfg.fir_n, derive_stream(cfg.seed, i, 1));
    const VectorXd u = generate_input(cfg.input_kind, cfg.N, derive_stream(cfg.seed, i, 2));
    auto rng = make_rng(cfg.seed, i, 3);
    std::uniform_real_distribution<double> snr_draw(cfg.snr_range[0], cfg.snr_range[1]);
    const SimulatedData sim = simulate_snr(sys.theta0, u, snr_draw(rng), derive_stream(cfg.seed, i, 4));
    const DatasetCachePtr cache = make_dataset_cache(sim.d);
    OptimizerConfig opt = cfg.optimizer;
    opt.seed = derive_stream(cfg.seed, i, 5);

    std::vector<RunRecord> records;
    records.reserve(kinds.size());
    for (CriterionKind kind : kinds) {
        RunRecord rec;
        rec.system_id = i;
        rec.estimator = criterion_tag(kind);
        rec.cond_gram = cache->cond_gram;
        rec.fit = kNaN;
        const auto start = std::chrono::steady_clock::now();
        try {
            const VectorXd* truth = criterion_is_oracle(kind) ? &sys.theta0 : nullptr;
            const EstimateReport rep =
                estimate_hyperparameter(kind, family, cache, sim.sigma2, truth, opt);
            rec.eta_hat = rep.eta_hat;
            rec.fit = fit_metric(rep.theta_hat, sys.theta0);
        } catch (const NonConvergenceError& e) {
            rec.eta_hat = e.best_eta;
            rec.error = "non-convergence";
        } catch (const IllConditionedError&) {
            rec.error = "ill-conditioned";
        } catch (const Error& e) {
            rec.error = e.what();
        }
        rec.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        records.push_back(std::move(rec));
    }
    return records;
}

ExperimentResult experiment_impl(const ExperimentConfig& cfg, bool parallel) {
    validate_config(cfg);
    const std::vector<CriterionKind> kinds = effective_estimators(cfg);
    const KernelFamily fam = family_from_tag(cfg.kernel_family);
    const KernelSpec family = KernelSpec::make(fam, neutral_eta(fam, cfg.fir_n), cfg.fir_n);

    std::vector<std::vector<RunRecord>> per_system(cfg.num_systems);
    std::vector<std::exception_ptr> failures(cfg.num_systems);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int i = 0; i < cfg.num_systems; ++i) {
        try {
            per_system[i] = run_system(cfg, kinds, family, i);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    }
    for (int i = 0; i < cfg.num_systems; ++i)
        if (failures[i]) std::rethrow_exception(failures[i]);

    ExperimentResult out;
    out.config = cfg;
    for (auto& records : per_system)
        for (auto& rec : records) out.runs.push_back(std::move(rec));

    for (CriterionKind kind : kinds) {
        const std::string tag = criterion_tag(kind);
        double sum = 0;
        int good = 0, bad = 0;
        for (const RunRecord& rec : out.runs) {
            if (rec.estimator != tag) continue;
            if (rec.error.empty() && std::isfinite(rec.fit)) {
                sum += rec.fit;
                ++good;
            } else {
                ++bad;
            }
        }
        out.mean_fit[tag] = good ? sum / good : kNaN;
        out.failures[tag] = bad;
    }

    if (!cfg.output_dir.empty()) {
        namespace fs = std::filesystem;
        const fs::path dir(cfg.output_dir);
        fs::create_directories(dir);
        std::ofstream runs(dir / "runs.csv");
        std::ofstream summary(dir / "summary.json");
        std::ofstream box(dir / "boxplot.csv");
        if (!runs || !summary || !box)
            throw ConfigError("cannot write experiment outputs under " + cfg.output_dir);
        write_runs_csv(out, runs);
        summary << summary_json(out) << '\n';
        write_boxplot_csv(out, box);
    }
    return out;
}

std::string join_eta(const VectorXd& eta) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (i) os << ';';
        os << eta(i);
    }
    return os.str();
}

/// Quantile with linear interpolation between closest ranks; v must be sorted.
double sorted_quantile(const std::vector<double>& v, double q) {
    if (v.empty()) return kNaN;
    const double pos = q * (static_cast<double>(v.size()) - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

void write_quantile_row(std::ostream& os, const std::string& name, std::vector<double> values) {
    std::sort(values.begin(), values.end());
    os << name;
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) os << ',' << sorted_quantile(values, q);
    os << '\n';
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    return experiment_impl(cfg, /*parallel=*/true);
}

ExperimentResult run_experiment_serial(const ExperimentConfig& cfg) {
    return experiment_impl(cfg, /*parallel=*/false);
}

void write_runs_csv(const ExperimentResult& result, std::ostream& os, bool include_wall_time) {
    os << "system_id,estimator,fit,eta,cond_gram";
    if (include_wall_time) os << ",wall_time_ms";
    os << ",error\n";
    os.precision(std::numeric_limits<double>::max_digits10);
    for (const RunRecord& rec : result.runs) {
        os << rec.system_id << ',' << rec.estimator << ',' << rec.fit << ','
           << join_eta(rec.eta_hat) << ',' << rec.cond_gram;
        if (include_wall_time) os << ',' << rec.wall_time_ms;
        os << ',' << rec.error << '\n';
    }
}

std::string summary_json(const ExperimentResult& result) {
    json j;
    j["config"] = json::parse(experiment_config_to_json(result.config));
    j["num_runs"] = result.runs.size();
    for (const auto& [tag, mean] : result.mean_fit)
        j["mean_fit"][tag] = std::isfinite(mean) ? json(mean) : json();
    for (const auto& [tag, count] : result.failures) j["failures"][tag] = count;
    return j.dump(2);
}

void write_boxplot_csv(const ExperimentResult& result, std::ostream& os) {
    os << "series,min,q25,median,q75,max\n";
    os.precision(std::numeric_limits<double>::max_digits10);
    std::vector<std::string> order;
    for (const RunRecord& rec : result.runs)
        if (std::find(order.begin(), order.end(), rec.estimator) == order.end())
            order.push_back(rec.estimator);
    for (const std::string& tag : order) {
        std::vector<double> fits;
        for (const RunRecord& rec : result.runs)
            if (rec.estimator == tag && rec.error.empty() && std::isfinite(rec.fit))
                fits.push_back(rec.fit);
        write_quantile_row(os, tag, std::move(fits));
    }
    std::vector<double> conds;
    int last_id = -1;
    for (const RunRecord& rec : result.runs) {
        if (rec.system_id == last_id) continue;
        last_id = rec.system_id;
        conds.push_back(rec.cond_gram);
    }
    write_quantile_row(os, "cond_gram", std::move(conds));
}

// ---------------------------------------------------------------------------
// Configuration JSON
// ---------------------------------------------------------------------------

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key in " + where + ": " + key);
    }
}

template <typename T>
void read_to(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("invalid value for key: ") + key);
    }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("experiment config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    check_keys(j,
               {"num_systems", "system_order", "fir_n", "input_kind", "N", "snr_range",
                "kernel_family", "estimators", "seed", "output_dir", "optimizer"},
               "experiment config");

    ExperimentConfig cfg;
    read_to(j, "num_systems", cfg.num_systems);
    read_to(j, "system_order", cfg.system_order);
    read_to(j, "fir_n", cfg.fir_n);
    read_to(j, "input_kind", cfg.input_kind);
    read_to(j, "N", cfg.N);
    read_to(j, "snr_range", cfg.snr_range);
    read_to(j, "kernel_family", cfg.kernel_family);
    read_to(j, "estimators", cfg.estimators);
    read_to(j, "seed", cfg.seed);
    read_to(j, "output_dir", cfg.output_dir);
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        if (!o.is_object()) throw ConfigError("optimizer section must be a JSON object");
        check_keys(o, {"restarts", "max_iters", "grad_tol", "step_tol", "seed", "method"},
                   "optimizer config");
        read_to(o, "restarts", cfg.optimizer.restarts);
        read_to(o, "max_iters", cfg.optimizer.max_iters);
        read_to(o, "grad_tol", cfg.optimizer.grad_tol);
        read_to(o, "step_tol", cfg.optimizer.step_tol);
        read_to(o, "seed", cfg.optimizer.seed);
        if (o.contains("method")) {
            std::string tag;
            read_to(o, "method", tag);
            cfg.optimizer.method = method_from_tag(tag);
        }
    }
    validate_config(cfg);
    return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["num_systems"] = cfg.num_systems;
    j["system_order"] = cfg.system_order;
    j["fir_n"] = cfg.fir_n;
    j["input_kind"] = cfg.input_kind;
    j["N"] = cfg.N;
    j["snr_range"] = cfg.snr_range;
    j["kernel_family"] = cfg.kernel_family;
    j["estimators"] = cfg.estimators;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    json o;
    o["restarts"] = cfg.optimizer.restarts;
    o["max_iters"] = cfg.optimizer.max_iters;
    o["grad_tol"] = cfg.optimizer.grad_tol;
    o["step_tol"] = cfg.optimizer.step_tol;
    o["seed"] = cfg.optimizer.seed;
    if (cfg.optimizer.method) o["method"] = method_tag(*cfg.optimizer.method);
    j["optimizer"] = std::move(o);
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

void write_dataset_csv(const Dataset& d, std::ostream& os) {
    os << "t,u,y\n";
    os.precision(std::numeric_limits<double>::max_digits10);
    for (int t = 0; t < d.N; ++t) os << t + 1 << ',' << d.u(t) << ',' << d.y(t) << '\n';
}

Dataset read_dataset_csv(std::istream& is, int n, bool burn_in) {
    auto strip = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("dataset csv is empty");
    strip(line);
    if (line != "t,u,y") throw ConfigError("dataset csv must start with the header t,u,y");

    std::vector<double> u, y;
    int expected_t = 1;
    while (std::getline(is, line)) {
        strip(line);
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string f0, f1, f2, extra;
        if (!std::getline(row, f0, ',') || !std::getline(row, f1, ',') ||
            !std::getline(row, f2, ','))
            throw ConfigError("dataset csv row has fewer than 3 fields: " + line);
        if (std::getline(row, extra, ','))
            throw ConfigError("dataset csv row has more than 3 fields: " + line);
        try {
            std::size_t used = 0;
            if (std::stoi(f0, &used) != expected_t || used != f0.size())
                throw ConfigError("dataset csv rows must be numbered 1..N in order");
            u.push_back(std::stod(f1, &used));
            if (used != f1.size()) throw ConfigError("bad input sample: " + f1);
            y.push_back(std::stod(f2, &used));
            if (used != f2.size()) throw ConfigError("bad output sample: " + f2);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("dataset csv row is not numeric: " + line);
        }
        ++expected_t;
    }
    if (u.empty()) throw ConfigError("dataset csv has no data rows");
    const VectorXd uv = Eigen::Map<const VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
    const VectorXd yv = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return make_dataset(uv, yv, n, burn_in);
}

}  // namespace regkern
