#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace minkob {

// Point lies outside the chart box, or a stencil would leave it.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Metric tensor failed positive-definiteness at an evaluation point.
struct MetricError : std::runtime_error {
    explicit MetricError(const std::string& what) : std::runtime_error(what) {}
};

struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Degenerate differential where an immersion is required.
struct ImmersionError : std::runtime_error {
    explicit ImmersionError(const std::string& what) : std::runtime_error(what) {}
};

struct ConnectivityError : std::runtime_error {
    explicit ConnectivityError(const std::string& what) : std::runtime_error(what) {}
};

// Newton/shooting failure; carries the residual history of the last attempt.
struct ConvergenceError : std::runtime_error {
    std::vector<double> residual_history;
    ConvergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}
};

// A barrier failed its MPSH scan; no lower bound available.
struct CertificateError : std::runtime_error {
    explicit CertificateError(const std::string& what) : std::runtime_error(what) {}
};

struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace minkob
