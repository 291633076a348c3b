// Performance harness: times the OpenMP Monte Carlo driver against its serial
// reference implementation (verifying identical results), then measures
// single criterion evaluations across data lengths to show the data-stage
// cost scales linearly in N.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "regkern/bench.hpp"
#include "regkern/criteria.hpp"
#include "regkern/kernels.hpp"
#include "regkern/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using regkern::MatrixXd;
using regkern::VectorXd;

double time_ms(const std::function<void()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string runs_csv(const regkern::ExperimentResult& r) {
    std::ostringstream ss;
    regkern::write_runs_csv(r, ss, /*include_wall_time=*/false);
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regkern performance harness"};
    int systems = 16;
    int order = 10;
    int fir_n = 50;
    int N = 2000;
    int repeats = 5;
    int threads = 0;
    int restarts = 2;
    std::string input = "IT2";
    std::string family = "TC";
    std::uint64_t seed = 1;
    app.add_option("--systems", systems, "Monte Carlo systems")->check(CLI::PositiveNumber);
    app.add_option("--order", order, "true system order")->check(CLI::PositiveNumber);
    app.add_option("--fir-n", fir_n, "FIR model order")->check(CLI::PositiveNumber);
    app.add_option("--N", N, "samples per dataset")->check(CLI::PositiveNumber);
    app.add_option("--input", input, "input kind (IT1..IT4)");
    app.add_option("--family", family, "kernel family");
    app.add_option("--restarts", restarts, "optimizer restarts")->check(CLI::PositiveNumber);
    app.add_option("--repeats", repeats, "timing repeats for the evaluation benchmark")
        ->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "OpenMP worker count (default: all cores)")
        ->envname("REGKERN_THREADS")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "master seed");
    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
    int active_threads = omp_get_max_threads();
#else
    int active_threads = 1;
#endif

    // --- parallel driver vs serial reference ----------------------------
    regkern::ExperimentConfig cfg;
    cfg.num_systems = systems;
    cfg.system_order = order;
    cfg.fir_n = fir_n;
    cfg.input_kind = input;
    cfg.N = N;
    cfg.kernel_family = family;
    cfg.seed = seed;
    cfg.optimizer.restarts = restarts;

    std::printf("Monte Carlo driver: %d systems, order %d, n=%d, N=%d, %s input, %s kernel\n",
                systems, order, fir_n, N, input.c_str(), family.c_str());
    regkern::ExperimentResult serial_result, parallel_result;
    const double t_serial = time_ms([&] { serial_result = regkern::run_experiment_serial(cfg); });
    const double t_parallel = time_ms([&] { parallel_result = regkern::run_experiment(cfg); });
    const bool identical = runs_csv(serial_result) == runs_csv(parallel_result);
    std::printf("  serial reference   %9.1f ms\n", t_serial);
    std::printf("  parallel driver    %9.1f ms   (%d thread%s, speedup %.2fx)\n", t_parallel,
                active_threads, active_threads == 1 ? "" : "s", t_serial / t_parallel);
    std::printf("  identical results: %s\n", identical ? "yes" : "NO");

    // --- single criterion evaluation across N ---------------------------
    const int eval_n = 200;
    const regkern::SystemTruth sys =
        regkern::generate_test_system(30, eval_n, regkern::derive_stream(seed, 7, 1));
    VectorXd eta(2);
    eta << 1.0, 0.85;
    const regkern::KernelSpec spec =
        regkern::KernelSpec::make(regkern::KernelFamily::TC, eta, eval_n);
    const MatrixXd P = regkern::kernel_matrix(spec);

    std::printf("\nMarginal-likelihood evaluation from raw data (n=%d, %d repeats):\n", eval_n,
                repeats);
    double prev = 0;
    volatile double sink = 0;  // keep the timed call observable
    for (const int Ne : {4000, 8000}) {
        const VectorXd u =
            regkern::generate_input("IT2", Ne, regkern::derive_stream(seed, 8, Ne));
        const regkern::Dataset d =
            regkern::simulate_fixed_noise(sys.theta0, u, 0.1, regkern::derive_stream(seed, 9, Ne));
        std::vector<double> times;
        for (int r = 0; r < repeats; ++r)
            times.push_back(time_ms(
                [&] { sink = criterion_value(regkern::CriterionKind::EB, P, d, 0.1); }));
        const double med = median(times);
        if (prev > 0)
            std::printf("  N=%-6d median %8.2f ms   ratio vs previous N: %.2fx\n", Ne, med,
                        med / prev);
        else
            std::printf("  N=%-6d median %8.2f ms\n", Ne, med);
        prev = med;
    }
    (void)sink;
    return 0;
}
