#ifndef RINGLWR_ERRORS_HPP
#define RINGLWR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ringlwr {

/// Bad configuration, malformed input files, or invalid arguments.
/// CLI maps this family to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// I/O failure (missing file, unwritable directory).
class IoError : public ConfigError {
public:
    explicit IoError(const std::string& msg) : ConfigError(msg) {}
};

/// Inconsistent array/vector dimensions.
class ShapeError : public ConfigError {
public:
    explicit ShapeError(const std::string& msg) : ConfigError(msg) {}
};

/// Numerical failure at runtime (CFL violation, divergence, degenerate
/// kernel). CLI maps this family to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Explicit step would violate the CFL stability bound.
class SolverError : public NumericError {
public:
    explicit SolverError(const std::string& msg) : NumericError(msg) {}
};

/// Raw kernel vector sums to zero; normalization is undefined.
class DegenerateKernelError : public NumericError {
public:
    explicit DegenerateKernelError(const std::string& msg) : NumericError(msg) {}
};

/// Non-finite loss or gradient reached an optimizer update.
class OptimizerError : public NumericError {
public:
    explicit OptimizerError(const std::string& msg) : NumericError(msg) {}
};

} // namespace ringlwr

#endif
