#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hbflow {

// Contract violations (bad dimensions, invalid parameters) use
// std::invalid_argument directly. The types below classify runtime failures
// so tests and the CLI can tell them apart.

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotConvergedError : std::runtime_error {
    double residual;
    NotConvergedError(const std::string& what, double residual_)
        : std::runtime_error(what), residual(residual_) {}
};

struct UnsupportedOrderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a DLN component w+/- reaches zero and the kappa/phi integrands
// become singular.
struct SingularComponentError : std::runtime_error {
    std::vector<int> indices;
    SingularComponentError(const std::string& what, std::vector<int> idx)
        : std::runtime_error(what), indices(std::move(idx)) {}
};

struct ConfigError : std::runtime_error {
    std::string field_path;
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), field_path(path) {}
};

}  // namespace hbflow
