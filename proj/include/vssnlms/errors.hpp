#pragma once

#include <cstddef>
#include <cstdio>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vssnlms {

/// Invalid numeric parameter (negative variance, unstable pole, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Shape mismatch between vectors that must agree in length.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// NaN or infinity reached the adaptive recursion.
class NumericError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// beta is at or above the value for which the steady-state EMSE
/// denominator stays positive.
class BetaBoundError : public ParameterError {
public:
    BetaBoundError(double beta, double beta_max)
        : ParameterError("beta=" + format_g(beta) +
                         " violates the steady-state bound beta < beta_max=" +
                         format_g(beta_max)),
          beta_(beta), beta_max_(beta_max) {}

    double beta() const noexcept { return beta_; }
    double beta_max() const noexcept { return beta_max_; }

private:
    static std::string format_g(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return buf;
    }

    double beta_;
    double beta_max_;
};

/// Malformed or unsupported input file; field() names the offending header field.
class IngestionError : public std::runtime_error {
public:
    IngestionError(std::string field, const std::string& what)
        : std::runtime_error(what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A run inside an ensemble failed; run_index() identifies it.
class EnsembleError : public std::runtime_error {
public:
    EnsembleError(std::size_t run_index, const std::string& cause)
        : std::runtime_error("ensemble run " + std::to_string(run_index) + " failed: " + cause),
          run_index_(run_index) {}

    std::size_t run_index() const noexcept { return run_index_; }

private:
    std::size_t run_index_;
};

using WarningHandler = std::function<void(std::string_view)>;

// Process-wide sink for non-fatal diagnostics. Not synchronized; install
// handlers before starting worker threads.
inline WarningHandler& warning_handler() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

inline void warn(std::string_view msg) {
    if (auto& h = warning_handler()) h(msg);
}

} // namespace vssnlms
