// Command-line front end for the regkern library.
//
//   regkern estimate     hyperparameter estimation on one dataset CSV
//   regkern benchmark    Monte Carlo fit comparison driven by a config JSON
//   regkern rates        convergence-toward-the-limit experiment
//   regkern closed-form  orthonormal-design closed-form weights
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "regkern/asymptotics.hpp"
#include "regkern/bench.hpp"
#include "regkern/criteria.hpp"
#include "regkern/errors.hpp"
#include "regkern/hyperopt.hpp"
#include "regkern/kernels.hpp"
#include "regkern/model_core.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using regkern::ConfigError;
using regkern::Dataset;
using regkern::VectorXd;

constexpr double kOrthonormalityTol = 1e-8;

std::string slurp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Dataset load_dataset(const std::string& path, int order, bool burn_in) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file: " + path);
    return regkern::read_dataset_csv(in, order, burn_in);
}

/// Noise variance for criterion evaluation: the --sigma2 flag when given,
/// otherwise the least-squares residual estimate from the dataset itself.
double resolve_sigma2(const std::optional<double>& flag, const Dataset& d) {
    if (flag) {
        if (!std::isfinite(*flag) || *flag <= 0)
            throw ConfigError("--sigma2 must be a positive finite number");
        return *flag;
    }
    return regkern::sigma2_estimate(d);
}

std::vector<double> to_std(const VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

std::string brief(double x) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::scientific << x;
    return ss.str();
}

/// Write `text` (plus a trailing newline) to `out_path`, or to stdout when
/// the path is empty.
void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot open output file: " + out_path);
    out << text << '\n';
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown key in " + where + ": " + it.key());
    }
}

template <typename T>
T read_key(const json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("invalid value for key: " + key);
    }
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
    std::string data;
    int order = 0;
    std::string family = "TC";
    std::string criterion = "EB";
    std::optional<double> sigma2;
    bool burn_in = false;
    std::uint64_t seed = 0;
    std::optional<int> restarts;
    std::optional<int> max_iters;
    std::string out;
};

int run_estimate(const EstimateArgs& a) {
    const regkern::CriterionKind kind = regkern::criterion_from_tag(a.criterion);
    if (regkern::criterion_is_oracle(kind))
        throw ConfigError("criterion " + a.criterion +
                          " needs the true parameter vector, which a dataset file does not "
                          "carry; use EB, SUREg, or SUREy");
    const Dataset d = load_dataset(a.data, a.order, a.burn_in);
    const double sigma2 = resolve_sigma2(a.sigma2, d);
    const regkern::KernelFamily fam = regkern::family_from_tag(a.family);
    const regkern::KernelSpec spec =
        regkern::KernelSpec::make(fam, regkern::neutral_eta(fam, d.n), d.n);

    regkern::OptimizerConfig opt;
    opt.seed = a.seed;
    if (a.restarts) opt.restarts = *a.restarts;
    if (a.max_iters) opt.max_iters = *a.max_iters;

    const regkern::EstimateReport rep =
        regkern::estimate_hyperparameter(kind, spec, d, sigma2, nullptr, opt);

    json j;
    j["criterion"] = rep.criterion;
    j["family"] = rep.family;
    j["order"] = d.n;
    j["N"] = d.N;
    j["sigma2"] = sigma2;
    j["sigma2_source"] = a.sigma2 ? "flag" : "residual_estimate";
    j["eta_hat"] = to_std(rep.eta_hat);
    j["criterion_value"] = rep.criterion_value;
    j["theta_hat"] = to_std(rep.theta_hat);
    j["fit"] = rep.fit ? json(*rep.fit) : json();
    j["diagnostics"] = {{"iterations", rep.diagnostics.iterations},
                        {"restarts", rep.diagnostics.restarts},
                        {"function_evals", rep.diagnostics.function_evals},
                        {"converged", rep.diagnostics.converged},
                        {"boundary", rep.diagnostics.boundary},
                        {"grad_norm", rep.diagnostics.grad_norm}};
    emit(j.dump(2), a.out);
    return 0;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

struct BenchmarkArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int run_benchmark(const BenchmarkArgs& a) {
    regkern::ExperimentConfig cfg = regkern::experiment_config_from_json(slurp_file(a.config));
    if (a.seed) cfg.seed = *a.seed;
    if (!a.out.empty()) cfg.output_dir = a.out;
    const regkern::ExperimentResult result = regkern::run_experiment(cfg);
    std::cout << regkern::summary_json(result) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// rates
// ---------------------------------------------------------------------------

struct RatesArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

regkern::OptimizerConfig optimizer_from_json(const json& j) {
    check_keys(j, {"restarts", "max_iters", "grad_tol", "step_tol", "seed", "method"},
               "optimizer");
    regkern::OptimizerConfig o;
    if (j.contains("restarts")) o.restarts = read_key<int>(j, "restarts");
    if (j.contains("max_iters")) o.max_iters = read_key<int>(j, "max_iters");
    if (j.contains("grad_tol")) o.grad_tol = read_key<double>(j, "grad_tol");
    if (j.contains("step_tol")) o.step_tol = read_key<double>(j, "step_tol");
    if (j.contains("seed")) o.seed = read_key<std::uint64_t>(j, "seed");
    if (j.contains("method"))
        o.method = regkern::method_from_tag(read_key<std::string>(j, "method"));
    return o;
}

int run_rates(const RatesArgs& a) {
    json j;
    try {
        j = json::parse(slurp_file(a.config));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    check_keys(j,
               {"theta0", "sigma2", "input_kind", "kernel_family", "N_grid", "replicates",
                "seed", "optimizer", "output_dir"},
               "rates config");
    for (const char* key : {"theta0", "sigma2", "N_grid", "replicates"})
        if (!j.contains(key)) throw ConfigError(std::string("missing required key: ") + key);

    const auto theta0 = read_key<std::vector<double>>(j, "theta0");
    if (theta0.empty()) throw ConfigError("invalid value for key: theta0");
    const double sigma2 = read_key<double>(j, "sigma2");
    if (!std::isfinite(sigma2) || sigma2 <= 0)
        throw ConfigError("invalid value for key: sigma2");
    const std::string input_kind =
        j.contains("input_kind") ? read_key<std::string>(j, "input_kind") : "IT2";
    const std::string family_tag =
        j.contains("kernel_family") ? read_key<std::string>(j, "kernel_family") : "TC";
    const auto N_grid = read_key<std::vector<int>>(j, "N_grid");
    const int replicates = read_key<int>(j, "replicates");
    std::uint64_t seed = j.contains("seed") ? read_key<std::uint64_t>(j, "seed") : 0;
    std::string output_dir =
        j.contains("output_dir") ? read_key<std::string>(j, "output_dir") : "";
    regkern::OptimizerConfig opt;
    if (j.contains("optimizer")) opt = optimizer_from_json(j.at("optimizer"));

    if (a.seed) seed = *a.seed;
    if (!a.out.empty()) output_dir = a.out;

    const int n = static_cast<int>(theta0.size());
    regkern::LimitSpec ls;
    ls.theta0 = Eigen::Map<const VectorXd>(theta0.data(), n);
    if (!ls.theta0.allFinite()) throw ConfigError("invalid value for key: theta0");
    ls.sigma2 = sigma2;
    const regkern::KernelFamily fam = regkern::family_from_tag(family_tag);
    ls.family = regkern::KernelSpec::make(fam, regkern::neutral_eta(fam, n), n);
    ls.Sigma = regkern::input_sigma(input_kind, n);

    const regkern::RateResult r =
        regkern::convergence_rate_experiment(ls, input_kind, N_grid, replicates, seed, opt);
    const std::string summary = regkern::rate_summary_json(r);

    if (!output_dir.empty()) {
        fs::create_directories(output_dir);
        const fs::path dir(output_dir);
        std::ofstream csv(dir / "rates.csv");
        if (!csv) throw ConfigError("cannot open output file: " + (dir / "rates.csv").string());
        regkern::write_rate_csv(r, csv);
        std::ofstream js(dir / "slopes.json");
        if (!js) throw ConfigError("cannot open output file: " + (dir / "slopes.json").string());
        js << summary << '\n';
    }
    std::cout << summary << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// closed-form
// ---------------------------------------------------------------------------

struct ClosedFormArgs {
    std::string data;
    int order = 0;
    std::optional<double> sigma2;
    bool burn_in = false;
    std::string out;
};

int run_closed_form(const ClosedFormArgs& a) {
    const Dataset d = load_dataset(a.data, a.order, a.burn_in);
    const double sigma2 = resolve_sigma2(a.sigma2, d);
    const double defect = regkern::orthonormality_defect(d);
    if (!(defect <= kOrthonormalityTol))
        throw regkern::DomainError("design is not orthonormal after scaling (defect " +
                                   brief(defect) +
                                   " exceeds 1e-8); the closed forms do not apply");
    const VectorXd theta_ls = regkern::ls_estimate(d);

    json j;
    j["order"] = d.n;
    j["N"] = d.N;
    j["sigma2"] = sigma2;
    j["sigma2_source"] = a.sigma2 ? "flag" : "residual_estimate";
    j["orthonormality_defect"] = defect;
    j["theta_ls"] = to_std(theta_ls);
    j["ridge_eta"] = regkern::closed_form_ridge(theta_ls, d.n, d.N, sigma2);
    j["diagonal_eta"] = to_std(regkern::closed_form_diagonal(theta_ls, d.N, sigma2));
    emit(j.dump(2), a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-regularized FIR identification: estimation, benchmarks, and "
                 "limit experiments"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads,
                   "OpenMP worker count (default: all cores; env REGKERN_THREADS)")
        ->envname("REGKERN_THREADS")
        ->check(CLI::PositiveNumber);

    EstimateArgs est;
    auto* est_cmd =
        app.add_subcommand("estimate", "Estimate kernel hyperparameters from a dataset CSV");
    est_cmd->fallthrough();
    est_cmd->add_option("--data", est.data, "dataset CSV with header t,u,y")->required();
    est_cmd->add_option("--order", est.order, "FIR model order n")
        ->required()
        ->check(CLI::PositiveNumber);
    est_cmd->add_option("--family", est.family, "kernel family: TC, DC, SS, Ridge, Diagonal");
    est_cmd->add_option("--criterion", est.criterion,
                        "data-driven criterion: EB, SUREg, or SUREy");
    est_cmd->add_option("--sigma2", est.sigma2,
                        "noise variance (default: least-squares residual estimate)");
    est_cmd->add_flag("--burn-in", est.burn_in,
                      "drop the first n outputs so every regressor row is fully observed");
    est_cmd->add_option("--seed", est.seed, "optimizer start-placement seed");
    est_cmd->add_option("--restarts", est.restarts, "optimizer restarts (default 8)");
    est_cmd->add_option("--max-iters", est.max_iters,
                        "iteration cap per local search (default 500)");
    est_cmd->add_option("--out", est.out, "write the report JSON here instead of stdout");

    BenchmarkArgs ben;
    auto* ben_cmd = app.add_subcommand(
        "benchmark", "Run the Monte Carlo fit comparison described by a config JSON");
    ben_cmd->fallthrough();
    ben_cmd->add_option("--config", ben.config, "experiment configuration JSON")->required();
    ben_cmd->add_option("--seed", ben.seed, "override the config seed");
    ben_cmd->add_option("--out", ben.out,
                        "override the config output_dir (runs.csv, summary.json, boxplot.csv)");

    RatesArgs rat;
    auto* rat_cmd = app.add_subcommand(
        "rates", "Measure convergence of the estimators toward their limit minimizers");
    rat_cmd->fallthrough();
    rat_cmd->add_option("--config", rat.config, "rate experiment configuration JSON")
        ->required();
    rat_cmd->add_option("--seed", rat.seed, "override the config seed");
    rat_cmd->add_option("--out", rat.out,
                        "override the config output_dir (rates.csv, slopes.json)");

    ClosedFormArgs cf;
    auto* cf_cmd = app.add_subcommand(
        "closed-form", "Ridge and diagonal closed-form weights for orthonormal designs");
    cf_cmd->fallthrough();
    cf_cmd->add_option("--data", cf.data, "dataset CSV with header t,u,y")->required();
    cf_cmd->add_option("--order", cf.order, "FIR model order n")
        ->required()
        ->check(CLI::PositiveNumber);
    cf_cmd->add_option("--sigma2", cf.sigma2,
                       "noise variance (default: least-squares residual estimate)");
    cf_cmd->add_flag("--burn-in", cf.burn_in,
                     "drop the first n outputs so every regressor row is fully observed");
    cf_cmd->add_option("--out", cf.out, "write the report JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // help / version
        app.exit(e);  // prints the diagnostic
        return 2;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        if (est_cmd->parsed()) return run_estimate(est);
        if (ben_cmd->parsed()) return run_benchmark(ben);
        if (rat_cmd->parsed()) return run_rates(rat);
        if (cf_cmd->parsed()) return run_closed_form(cf);
    } catch (const regkern::ConfigError& e) {
        std::cerr << "regkern: config error: " << e.what() << '\n';
        return 2;
    } catch (const regkern::DimensionError& e) {
        std::cerr << "regkern: config error: " << e.what() << '\n';
        return 2;
    } catch (const regkern::Error& e) {
        std::cerr << "regkern: numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "regkern: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
