#pragma once

// Variable step size for NLMS driven by an estimate of the true tracking
// error power sigma_c^2(n) = E[(e(n) - v(n))^2]:
//
//   sigma_x^2(n) = alpha sigma_x^2(n-1) + (1 - alpha) x(n)^2
//   gamma(n)     = alpha gamma(n-1) + (1 - alpha) e(n) x(n)
//   sigma_c^2(n) = gamma^T gamma / (rho + sigma_x^2(n))
//   mu(n)        = mu_max + (mu_min - mu_max) exp(-beta sigma_c^2(n))
//
// Per sample: error, estimate updates, sigma_c^2, mu, weight update. The
// current sample's estimates feed the current update.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "errors.hpp"
#include "filter_core.hpp"

namespace vssnlms {

struct VssParams {
    double mu_min = 0.001;
    double mu_max = 1.2;
    double beta = 20.0;
    double alpha = 0.95;
    double rho = 1e-6;

    void validate() const {
        if (!(mu_min > 0.0)) throw ParameterError("mu_min must be > 0, got " + std::to_string(mu_min));
        if (!(mu_min <= mu_max))
            throw ParameterError("mu_min must not exceed mu_max (" + std::to_string(mu_min) + " > " +
                                 std::to_string(mu_max) + ")");
        if (!(mu_max < 2.0)) throw ParameterError("mu_max must be < 2, got " + std::to_string(mu_max));
        if (!(beta >= 0.0) || !std::isfinite(beta))
            throw ParameterError("beta must be finite and >= 0, got " + std::to_string(beta));
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw ParameterError("alpha must lie in [0, 1), got " + std::to_string(alpha));
        if (!(rho > 0.0)) throw ParameterError("rho must be > 0, got " + std::to_string(rho));
    }
};

/// alpha = 1 - 1/(kappa M). kappa < 2 is allowed but warned about.
inline double default_alpha(std::size_t taps, double kappa = 2.0) {
    if (taps == 0) throw ParameterError("filter length M must be >= 1");
    if (!(kappa > 0.0)) throw ParameterError("kappa must be > 0, got " + std::to_string(kappa));
    if (kappa < 2.0)
        warn("kappa=" + std::to_string(kappa) +
             " below 2; the averaging window is shorter than recommended");
    return 1.0 - 1.0 / (kappa * static_cast<double>(taps));
}

/// delta = M (1 + sqrt(1 + SNR)) sigma_x^2 / SNR, SNR linear.
inline double regularization_delta(std::size_t taps, double sigma_x2, double snr_linear) {
    if (!(snr_linear > 0.0))
        throw ParameterError("SNR must be > 0 (linear), got " + std::to_string(snr_linear));
    if (!(sigma_x2 >= 0.0)) throw ParameterError("input power must be >= 0");
    return static_cast<double>(taps) * (1.0 + std::sqrt(1.0 + snr_linear)) * sigma_x2 / snr_linear;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Table II settings: mu_max = 1.2, mu_min = 0.001, kappa = 2, beta = 20.
inline VssParams table_ii_params(std::size_t taps, double beta = 20.0) {
    return {.mu_min = 0.001, .mu_max = 1.2, .beta = beta, .alpha = default_alpha(taps, 2.0),
            .rho = 1e-6};
}

template <class T = double>
struct VssState {
    explicit VssState(std::size_t taps, T mu0 = T(0)) : gamma_ex(taps), last_mu(mu0) {}

    T sigma_x2{0};
    TapVector<T> gamma_ex;
    T last_mu{0};
    T last_sigma_c2{0};
};

namespace detail {

template <class T>
void accumulate_power(VssState<T>& s, T x_sq, T alpha, T one_minus_alpha) {
    s.sigma_x2 = alpha * s.sigma_x2 + one_minus_alpha * x_sq;
}

// gamma_i += (1 - alpha) (e x_i - gamma_i)
template <class T>
void accumulate_crosscorr(VssState<T>& s, T e, std::span<const T> x, T one_minus_alpha) {
    auto& g = s.gamma_ex;
    if (g.size() != x.size())
        throw StructuralError("length mismatch: gamma_ex " + std::to_string(g.size()) +
                              " vs regressor " + std::to_string(x.size()));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] + one_minus_alpha * (e * x[i] - g[i]);
}

// Precomputed constants of the step-size law.
template <class T>
struct StepLaw {
    explicit StepLaw(const VssParams& p)
        : mu_min(p.mu_min), mu_max(p.mu_max), span(p.mu_max - p.mu_min), neg_beta(-p.beta),
          half_open(p.mu_max > p.mu_min),
          below_max(std::nextafter(p.mu_max, p.mu_min)) {}

    // mu_min + span (1 - exp(-beta s)); exact at s = 0, beta = 0 and span = 0.
    T operator()(T sigma_c2) const {
        using std::expm1;
        T mu = mu_min - span * expm1(neg_beta * sigma_c2);
        if (half_open && !(mu < mu_max)) mu = below_max;
        return mu;
    }

    T mu_min, mu_max, span, neg_beta;
    bool half_open;
    T below_max;
};

} // namespace detail

/// sigma_x2 <- alpha sigma_x2 + (1 - alpha) x_n^2.
template <class T>
void update_input_power(VssState<T>& s, T x_n, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in [0, 1)");
    detail::accumulate_power(s, x_n * x_n, T(alpha), T(1.0 - alpha));
}

/// gamma <- alpha gamma + (1 - alpha) e x.
template <class T>
void update_crosscorr(VssState<T>& s, T e, std::span<const T> x, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in [0, 1)");
    detail::accumulate_crosscorr(s, e, x, T(1.0 - alpha));
}

template <class T>
void update_crosscorr(VssState<T>& s, T e, const RegressorBuffer<T>& x, double alpha) {
    update_crosscorr(s, e, x.window(), alpha);
}

/// gamma^T gamma / (rho + sigma_x2); stored in last_sigma_c2.
template <class T>
T tracking_error_power(VssState<T>& s, T rho) {
    if (!(rho > T(0))) throw ParameterError("rho must be > 0");
    s.last_sigma_c2 = s.gamma_ex.squared_norm() / (rho + s.sigma_x2);
    return s.last_sigma_c2;
}

/// Step-size law; returns a value in [mu_min, mu_max) (exactly mu_min when
/// mu_min == mu_max).
inline double step_size(double sigma_c2, const VssParams& params) {
    return detail::StepLaw<double>(params)(sigma_c2);
}

/// NLMS whose step size follows the tracking-error-power law.
template <class T = double>
class VssNlmsFilter {
public:
    /// `cfg.mu` is ignored; `cfg.delta` and `cfg.taps` are used.
    VssNlmsFilter(const VssParams& params, const NlmsConfig& cfg)
        : params_((params.validate(), params)), cfg_((cfg.validate(false), cfg)), w_(cfg.taps),
          x_(cfg.taps), state_(cfg.taps, T(params.mu_min)), law_(params), alpha_(params.alpha),
          one_minus_alpha_(1.0 - params.alpha), rho_(params.rho), delta_(cfg.delta) {}

    StepRecord<T> step(T x, T d) {
        x_.push(x);
        const auto out = filter_error(w_, x_, d);
        detail::accumulate_power(state_, x_.newest_square(), alpha_, one_minus_alpha_);
        detail::accumulate_crosscorr(state_, out.e, x_.window(), one_minus_alpha_);
        const T sigma_c2 = state_.gamma_ex.squared_norm() / (rho_ + state_.sigma_x2);
        detail::require_finite(sigma_c2, "tracking error power");
        state_.last_sigma_c2 = sigma_c2;
        state_.last_mu = law_(sigma_c2);
        detail::nlms_update_inplace(w_, x_.window(), x_.energy(), out.e, state_.last_mu, delta_);
        return {out.y, out.e, state_.last_mu, sigma_c2};
    }

    const TapVector<T>& weights() const noexcept { return w_; }
    void set_weights(TapVector<T> w) {
        if (w.size() != w_.size()) throw StructuralError("weight length mismatch");
        w_ = std::move(w);
    }
    const RegressorBuffer<T>& regressor() const noexcept { return x_; }
    const VssState<T>& state() const noexcept { return state_; }
    const VssParams& params() const noexcept { return params_; }

private:
    VssParams params_;
    NlmsConfig cfg_;
    TapVector<T> w_;
    RegressorBuffer<T> x_;
    VssState<T> state_;
    detail::StepLaw<T> law_;
    T alpha_, one_minus_alpha_, rho_, delta_;
};

/// Per-iteration outputs of the variable-step run.
struct VssTrajectory {
    Trajectory filter;
    std::vector<double> mu;
    std::vector<double> sigma_c2;
};

inline VssTrajectory run_vss_nlms(const VssParams& params, const NlmsConfig& config,
                                  std::span<const double> input, std::span<const double> desired) {
    VssNlmsFilter<double> f(params, config);
    VssTrajectory t;
    t.filter.weights.reserve(input.size());
    drive(f, input, desired, [&](std::size_t, const auto& rec, const auto& filt) {
        t.filter.errors.push_back(rec.e);
        t.filter.weights.push_back(filt.weights());
        t.mu.push_back(rec.mu);
        t.sigma_c2.push_back(rec.sigma_c2);
    });
    return t;
}

} // namespace vssnlms
