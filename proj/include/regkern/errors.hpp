#pragma once

#include <stdexcept>
#include <string>

namespace regkern {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Mismatched or non-positive dimensions (e.g. N < n, length mismatches).
struct DimensionError : Error {
    using Error::Error;
};

/// Malformed configuration, file, or argument values.
struct ConfigError : Error {
    using Error::Error;
};

/// A value lies outside its declared domain (e.g. eta outside the feasible box,
/// sigma2 <= 0, missing theta0 for an oracle criterion).
struct DomainError : Error {
    using Error::Error;
};

/// Kernel matrix failed validation (non-finite entries, negative eigenvalue
/// beyond tolerance, underflowed to non-positive-definite).
struct InvalidKernelError : Error {
    using Error::Error;
};

/// A matrix required by the requested operation is too ill-conditioned.
struct IllConditionedError : Error {
    double condition;
    IllConditionedError(const std::string& msg, double cond)
        : Error(msg + " (condition estimate " + std::to_string(cond) + ")"), condition(cond) {}
};

/// The fit metric is undefined (constant true parameter vector).
struct UndefinedFitError : Error {
    using Error::Error;
};

}  // namespace regkern
