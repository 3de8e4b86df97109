#pragma once

// Closed-form steady-state predictors for the variable-step NLMS under a
// zero-mean white Gaussian input. Pure functions, safe from any thread.

#include <cstddef>
#include <limits>
#include <string>

#include "errors.hpp"

namespace vssnlms {

struct SteadyStateInputs {
    std::size_t taps = 1;  // M
    double alpha = 0.5;
    double beta = 0.0;
    double mu_min = 0.001;
    double mu_max = 1.2;
    double sigma_v2 = 0.0;  // system-noise power, also the minimum MSE
    double sigma_x2 = 1.0;  // input power
    double delta = 0.0;

    void validate() const {
        if (taps == 0) throw ParameterError("M must be >= 1");
        if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in [0, 1)");
        if (!(beta >= 0.0)) throw ParameterError("beta must be >= 0");
        if (!(mu_min > 0.0 && mu_min <= mu_max && mu_max < 2.0))
            throw ParameterError("step sizes must satisfy 0 < mu_min <= mu_max < 2");
        if (!(sigma_v2 >= 0.0)) throw ParameterError("sigma_v2 must be >= 0");
        if (!(sigma_x2 > 0.0)) throw ParameterError("sigma_x2 must be > 0");
        if (!(delta >= 0.0)) throw ParameterError("delta must be >= 0");
    }
};

/// Fixed-step NLMS misadjustment mu / (2 - mu).
inline double misadjustment(double mu) {
    if (!(mu > 0.0 && mu < 2.0))
        throw ParameterError("misadjustment requires 0 < mu < 2, got " + std::to_string(mu));
    return mu / (2.0 - mu);
}

namespace detail {
// beta M (mu_max - mu_min)(1 - alpha) sigma_v^2, the step-size excess term.
inline double excess_term(const SteadyStateInputs& in) {
    return in.beta * static_cast<double>(in.taps) * (in.mu_max - in.mu_min) * (1.0 - in.alpha) *
           in.sigma_v2;
}
} // namespace detail

/// E[mu(inf)] = mu_min + (mu_max - mu_min) beta M (1-alpha)/(1+alpha) sigma_v^2.
inline double expected_steady_mu(const SteadyStateInputs& in) {
    in.validate();
    return in.mu_min + (in.mu_max - in.mu_min) * in.beta * static_cast<double>(in.taps) *
                           ((1.0 - in.alpha) / (1.0 + in.alpha)) * in.sigma_v2;
}

/// Largest admissible beta; +infinity when sigma_v^2 = 0 or mu_max = mu_min.
inline double beta_upper_bound(const SteadyStateInputs& in) {
    in.validate();
    const double denom = static_cast<double>(in.taps) * (in.mu_max - in.mu_min) *
                         (1.0 - in.alpha) * in.sigma_v2;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return (2.0 - in.mu_min) * (1.0 + in.alpha) / denom;
}

/// Steady-state excess MSE. Throws BetaBoundError when beta >= beta_max.
inline double steady_emse(const SteadyStateInputs& in) {
    in.validate();
    const double x = detail::excess_term(in);
    const double den = (2.0 - in.mu_min) * (1.0 + in.alpha) - x;
    if (!(den > 0.0)) throw BetaBoundError(in.beta, beta_upper_bound(in));
    return (in.mu_min * (1.0 + in.alpha) + x) / den * in.sigma_v2;
}

/// Fixed-step NLMS MSD: mu M sigma_v^2 / ((2 - mu) M sigma_x^2 + 2 delta).
inline double steady_msd_nlms(double mu, std::size_t taps, double sigma_v2, double sigma_x2,
                              double delta) {
    if (!(mu > 0.0 && mu < 2.0))
        throw ParameterError("steady_msd_nlms requires 0 < mu < 2, got " + std::to_string(mu));
    const double m = static_cast<double>(taps);
    return mu * m * sigma_v2 / ((2.0 - mu) * m * sigma_x2 + 2.0 * delta);
}

/// Steady-state MSD of the variable-step filter, including delta.
inline double steady_msd(const SteadyStateInputs& in) {
    in.validate();
    const double m = static_cast<double>(in.taps);
    const double k = in.beta * m * m * (1.0 - in.alpha) * (in.mu_max - in.mu_min);
    const double num = in.mu_min * m * (1.0 + in.alpha) * in.sigma_v2 + k * in.sigma_v2 * in.sigma_v2;
    const double den = (1.0 + in.alpha) * ((2.0 - in.mu_min) * m * in.sigma_x2 + 2.0 * in.delta) -
                       k * in.sigma_x2 * in.sigma_v2;
    if (!(den > 0.0)) throw BetaBoundError(in.beta, beta_upper_bound(in));
    return num / den;
}

} // namespace vssnlms
