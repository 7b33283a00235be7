#pragma once

#include <stdexcept>
#include <string>

namespace hermex {

// Invalid construction parameters or run configuration (bad orders, step
// counts, malformed model parameters). CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A drift/diffusion/integrand evaluation produced a non-finite value.
// Carries the offending node so failures are attributable.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(const std::string& what, double x, double t)
        : std::runtime_error(what + " at node x=" + std::to_string(x) +
                             ", t=" + std::to_string(t)),
          node_x(x), node_t(t) {}

    double node_x;
    double node_t;
};

// The initial-coefficient limit estimate failed for some order.
class StartupError : public std::runtime_error {
public:
    StartupError(const std::string& what, int order)
        : std::runtime_error(what + " (coefficient order n=" + std::to_string(order) + ")"),
          order(order) {}

    int order;
};

// Coefficient derivatives exceeded the stiffness bound; continuing would
// only integrate garbage. CLI maps this to exit code 3.
class StiffnessError : public std::runtime_error {
public:
    StiffnessError(double t, int order, double value)
        : std::runtime_error("coefficient system stiff at t=" + std::to_string(t) +
                             ": |a'_" + std::to_string(order) + "| = " + std::to_string(value)),
          t(t), order(order), value(value) {}

    double t;
    int order;
    double value;
};

}  // namespace hermex
