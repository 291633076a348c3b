#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace regkern {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Ground truth of a simulated system: the FIR coefficient vector, the noise
/// variance used when generating data, and (when generated from a state-space
/// realization) the state order it came from.
struct SystemTruth {
    VectorXd theta0;    ///< impulse-response coefficients g_1..g_n
    double sigma2 = 0;  ///< innovation variance of the measurement noise
    int ss_order = 0;   ///< 0 when theta0 was given directly
};

/// Input/output data with the associated regressor matrix. Row t of `phi`
/// holds the n lagged inputs that produce y(t).
struct Dataset {
    VectorXd u;    ///< input samples driving the rows of phi
    VectorXd y;    ///< measured output, length N
    MatrixXd phi;  ///< N x n regressor matrix
    int N = 0;     ///< number of output samples (rows)
    int n = 0;     ///< FIR model order (columns)
};

/// Diagnostics attached to a hyperparameter estimate.
struct OptimizerDiagnostics {
    int iterations = 0;      ///< iterations of the winning restart
    int restarts = 0;        ///< restarts actually run
    long function_evals = 0; ///< criterion evaluations across all restarts
    bool converged = false;  ///< tolerance met (transformed-gradient test)
    bool boundary = false;   ///< estimate sits on the feasible-box boundary
    double grad_norm = 0;    ///< transformed-coordinate gradient norm at the estimate
    std::vector<double> accepted_values;  ///< criterion values of accepted iterates (winning restart)
};

/// Result of estimating kernel hyperparameters on one dataset.
struct EstimateReport {
    std::string criterion;     ///< criterion tag (EB, SUREg, SUREy, MSEg, MSEy, EEB)
    std::string family;        ///< kernel family tag
    VectorXd eta_hat;          ///< estimated hyperparameters
    double criterion_value = 0;
    VectorXd theta_hat;        ///< regularized estimate at eta_hat
    std::optional<double> fit; ///< goodness-of-fit vs theta0, when theta0 is known
    OptimizerDiagnostics diagnostics;
};

}  // namespace regkern
