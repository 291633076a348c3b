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

// ---------------------------------------------------------------------------
// Test-system and input generation
// ---------------------------------------------------------------------------

/// Impulse response of a random stable state-space system of the given order,
/// truncated to fir_n samples and normalized to unit Euclidean norm. The
/// state matrix is standard Gaussian rescaled to a spectral radius drawn
/// uniformly from [0.5, 0.95]; degenerate draws are rejected and resampled.
SystemTruth generate_test_system(int order, int fir_n, std::uint64_t seed);

/// Input sequence of one of the four benchmark kinds, each normalized to
/// unit stationary variance:
///   IT1  white Gaussian noise through a linear-phase low-pass FIR
///        (order 50 windowed sinc, cutoff 0.6 Nyquist)
///   IT2  white Gaussian noise
///   IT3  white Gaussian noise through 1/(1 - 0.95 q^-1)^2, zero initial state
///   IT4  white Gaussian noise through 1/(1 - 0.05 q^-1)^2, zero initial state
VectorXd generate_input(const std::string& kind, int N, std::uint64_t seed);

/// Stationary autocovariance gamma(0 .. lags-1) of the normalized input
/// process of the given kind (exact; closed form for the rational filters).
VectorXd input_autocovariance(const std::string& kind, int lags);

/// Simulation output: the dataset plus the noise level actually applied.
struct SimulatedData {
    Dataset d;
    double sigma2 = 0;  ///< noise variance applied to the output
    double snr = 0;     ///< realized var(Phi theta0)/sigma2
};

/// Simulate y = Phi theta0 + e with the noise variance scaled so that the
/// empirical signal-to-noise ratio var(Phi theta0)/sigma2 equals snr exactly.
SimulatedData simulate_snr(const VectorXd& theta0, const VectorXd& u, double snr,
                           std::uint64_t noise_seed);

/// Simulate y = Phi theta0 + e at a fixed noise variance.
Dataset simulate_fixed_noise(const VectorXd& theta0, const VectorXd& u, double sigma2,
                             std::uint64_t noise_seed);

// ---------------------------------------------------------------------------
// Monte Carlo experiment
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    int num_systems = 100;
    int system_order = 30;
    int fir_n = 200;
    std::string input_kind = "IT2";
    int N = 500;
    std::array<double, 2> snr_range{1.0, 10.0};
    std::string kernel_family = "TC";
    std::vector<std::string> estimators;  ///< criterion tags; empty means all six
    std::uint64_t seed = 0;
    std::string output_dir;  ///< when non-empty, run_experiment writes files here
    OptimizerConfig optimizer;
};

/// Parse / serialize the experiment configuration (strict keys; unknown keys
/// are rejected so config typos fail loudly).
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

/// One (system, estimator) outcome. Failed estimations carry a NaN fit and a
/// non-empty error tag; eta_hat then holds the best iterate when one exists.
struct RunRecord {
    int system_id = 0;
    std::string estimator;
    double fit = 0;
    VectorXd eta_hat;
    double cond_gram = 0;
    double wall_time_ms = 0;
    std::string error;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RunRecord> runs;  ///< ordered by (system_id, estimator order)
    std::map<std::string, double> mean_fit;  ///< per estimator, successful runs
    std::map<std::string, int> failures;     ///< per estimator, failed runs
};

/// Run the Monte Carlo experiment; systems are independent work items
/// processed in parallel with per-item random streams, so the result is
/// identical to run_experiment_serial. When config.output_dir is set, writes
/// runs.csv, summary.json, and boxplot.csv there.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment_serial(const ExperimentConfig& cfg);

/// Per-run CSV. Column wall_time_ms is the only nondeterministic output and
/// can be omitted for byte-level comparisons.
void write_runs_csv(const ExperimentResult& result, std::ostream& os,
                    bool include_wall_time = true);
/// Mean fit and failure counts per estimator, plus the configuration.
std::string summary_json(const ExperimentResult& result);
/// Quantiles (min, q25, median, q75, max) of the fit per estimator and of the
/// Gram-matrix condition numbers across systems.
void write_boxplot_csv(const ExperimentResult& result, std::ostream& os);

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

/// Dataset CSV with header "t,u,y" and rows t = 1..N; full double precision.
void write_dataset_csv(const Dataset& d, std::ostream& os);
/// Parse a dataset CSV and assemble the regressor at FIR order n.
Dataset read_dataset_csv(std::istream& is, int n, bool burn_in = false);

}  // namespace regkern
