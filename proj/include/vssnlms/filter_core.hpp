#pragma once

// Transversal adaptive filter building blocks shared by fixed-step NLMS
// and the variable-step-size variant.
//
// All templates take the scalar type as a parameter so the same code path
// can be instantiated with Counted<double> for operation audits.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "op_count.hpp"

namespace vssnlms {

/// Length-M coefficient vector: unknown system, adaptive weights, or a
/// cross-correlation estimate.
template <class T = double>
class TapVector {
public:
    explicit TapVector(std::size_t taps) : c_(checked(taps), T(0)) {}
    explicit TapVector(std::vector<T> coefficients) : c_(std::move(coefficients)) {
        checked(c_.size());
    }

    std::size_t size() const noexcept { return c_.size(); }
    T& operator[](std::size_t i) noexcept { return c_[i]; }
    const T& operator[](std::size_t i) const noexcept { return c_[i]; }

    std::span<T> span() noexcept { return c_; }
    std::span<const T> span() const noexcept { return c_; }
    const std::vector<T>& values() const noexcept { return c_; }

    auto begin() noexcept { return c_.begin(); }
    auto end() noexcept { return c_.end(); }
    auto begin() const noexcept { return c_.begin(); }
    auto end() const noexcept { return c_.end(); }

    T squared_norm() const {
        T acc(0);
        for (const T& v : c_) acc += v * v;
        return acc;
    }

    TapVector operator-() const {
        TapVector out(*this);
        for (auto& v : out.c_) v = -v;
        return out;
    }

    friend bool operator==(const TapVector&, const TapVector&) = default;

private:
    static std::size_t checked(std::size_t taps) {
        if (taps == 0) throw StructuralError("tap vector length must be >= 1");
        return taps;
    }

    std::vector<T> c_;
};

/// Sliding window [x(n), x(n-1), ..., x(n-M+1)] with zero prehistory.
///
/// Stored twice in a 2M ring so window() is always one contiguous span.
/// Also tracks the window energy x^T x by the recursion
/// E(n) = E(n-1) + x(n)^2 - x(n-M)^2, clamped at zero.
template <class T = double>
class RegressorBuffer {
public:
    explicit RegressorBuffer(std::size_t taps)
        : taps_(taps), buf_(2 * taps, T(0)), head_(0) {
        if (taps == 0) throw StructuralError("regressor length must be >= 1");
    }

    void push(T x) {
        const T oldest = buf_[head_ + taps_ - 1];
        head_ = head_ == 0 ? taps_ - 1 : head_ - 1;
        buf_[head_] = x;
        buf_[head_ + taps_] = x;
        newest_sq_ = x * x;
        energy_ = energy_ + (newest_sq_ - oldest * oldest);
        if (energy_ < T(0)) energy_ = T(0);
    }

    std::size_t size() const noexcept { return taps_; }
    std::span<const T> window() const noexcept { return {buf_.data() + head_, taps_}; }
    T operator[](std::size_t i) const noexcept { return buf_[head_ + i]; }

    T energy() const noexcept { return energy_; }
    /// x(n)^2 of the most recent push.
    T newest_square() const noexcept { return newest_sq_; }

    void clear() {
        std::fill(buf_.begin(), buf_.end(), T(0));
        head_ = 0;
        energy_ = T(0);
        newest_sq_ = T(0);
    }

private:
    std::size_t taps_;
    std::vector<T> buf_;
    std::size_t head_;
    T energy_{0};
    T newest_sq_{0};
};

template <class T>
struct FilterOutput {
    T y;
    T e;
};

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size())
        throw StructuralError("length mismatch: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    T acc(0);
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// y = w^T x, e = d - y.
template <class T>
FilterOutput<T> filter_error(const TapVector<T>& w, std::span<const T> x, T d) {
    const T y = dot(w.span(), x);
    return {y, d - y};
}

template <class T>
FilterOutput<T> filter_error(const TapVector<T>& w, const RegressorBuffer<T>& x, T d) {
    return filter_error(w, x.window(), d);
}

namespace detail {

template <class T>
void require_finite(T v, const char* what) {
    if (!std::isfinite(value_of(v)))
        throw NumericError(std::string("non-finite ") + what + " in NLMS update");
}

// w += mu * e * x / (delta + energy), where energy = x^T x.
template <class T>
void nlms_update_inplace(TapVector<T>& w, std::span<const T> x, T energy, T e, T mu, T delta) {
    if (w.size() != x.size())
        throw StructuralError("length mismatch: weights " + std::to_string(w.size()) +
                              " vs regressor " + std::to_string(x.size()));
    require_finite(e, "error");
    require_finite(mu, "step size");
    const T denom = delta + energy;
    if (!(denom > T(0))) return;  // delta = 0 and x = 0: the increment is zero
    const T gain = mu * e / denom;
    require_finite(gain, "gain");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = w[i] + gain * x[i];
}

} // namespace detail

/// w + mu * e * x / (delta + x^T x). delta may be 0 when x != 0.
template <class T>
TapVector<T> nlms_update(TapVector<T> w, std::span<const T> x, T e, T mu, T delta) {
    if (delta < T(0)) throw ParameterError("regularization delta must be >= 0");
    detail::require_finite(delta, "regularization");
    T energy(0);
    for (const T& v : x) energy += v * v;
    detail::nlms_update_inplace(w, x, energy, e, mu, delta);
    return w;
}

template <class T>
TapVector<T> nlms_update(TapVector<T> w, const RegressorBuffer<T>& x, T e, T mu, T delta) {
    if (delta < T(0)) throw ParameterError("regularization delta must be >= 0");
    detail::nlms_update_inplace(w, x.window(), x.energy(), e, mu, delta);
    return w;
}

struct NlmsConfig {
    std::size_t taps = 1;
    double delta = 1e-6;
    double mu = 1.0;  // fixed-step mode only

    void validate(bool fixed_step = true) const {
        if (taps == 0) throw ParameterError("filter length M must be >= 1");
        if (!(delta > 0.0) || !std::isfinite(delta))
            throw ParameterError("regularization delta must be > 0, got " + std::to_string(delta));
        // mu = 0 (frozen filter) is accepted; the convergent range is (0, 2).
        if (fixed_step && (!(mu >= 0.0) || !(mu < 2.0)))
            throw ParameterError("fixed step size must satisfy 0 <= mu < 2, got " +
                                 std::to_string(mu));
    }
};

/// What one iteration of an adaptive filter reports.
template <class T>
struct StepRecord {
    T y;
    T e;
    T mu;
    T sigma_c2;  // NaN for filters without a tracking-error estimate
};

/// Fixed-step NLMS. step() pushes x(n), forms e(n) with w(n), then
/// produces w(n+1).
template <class T = double>
class NlmsFilter {
public:
    explicit NlmsFilter(const NlmsConfig& cfg)
        : cfg_((cfg.validate(), cfg)), w_(cfg.taps), x_(cfg.taps), mu_(cfg.mu), delta_(cfg.delta) {}

    StepRecord<T> step(T x, T d) {
        x_.push(x);
        const auto out = filter_error(w_, x_, d);
        detail::nlms_update_inplace(w_, x_.window(), x_.energy(), out.e, mu_, delta_);
        return {out.y, out.e, mu_, T(std::nan(""))};
    }

    const TapVector<T>& weights() const noexcept { return w_; }
    void set_weights(TapVector<T> w) {
        if (w.size() != w_.size()) throw StructuralError("weight length mismatch");
        w_ = std::move(w);
    }
    const RegressorBuffer<T>& regressor() const noexcept { return x_; }
    const NlmsConfig& config() const noexcept { return cfg_; }

private:
    NlmsConfig cfg_;
    TapVector<T> w_;
    RegressorBuffer<T> x_;
    T mu_;
    T delta_;
};

/// Per-iteration outputs of a batch run: weights[n] = w(n+1), errors[n] = e(n).
struct Trajectory {
    std::vector<TapVector<double>> weights;
    std::vector<double> errors;
};

/// Drive `filter` over paired streams, calling observer(n, record, filter)
/// after every update.
template <class Filter, class Observer>
void drive(Filter& filter, std::span<const double> input, std::span<const double> desired,
           Observer&& observer) {
    if (input.size() != desired.size())
        throw StructuralError("input and desired streams differ in length: " +
                              std::to_string(input.size()) + " vs " +
                              std::to_string(desired.size()));
    for (std::size_t n = 0; n < input.size(); ++n) {
        const auto rec = filter.step(input[n], desired[n]);
        observer(n, rec, std::as_const(filter));
    }
}

template <class Filter>
Trajectory record_trajectory(Filter& filter, std::span<const double> input,
                             std::span<const double> desired) {
    Trajectory t;
    t.weights.reserve(input.size());
    t.errors.reserve(input.size());
    drive(filter, input, desired, [&](std::size_t, const auto& rec, const auto& f) {
        t.errors.push_back(rec.e);
        t.weights.push_back(f.weights());
    });
    return t;
}

inline Trajectory run_fixed_nlms(const NlmsConfig& config, std::span<const double> input,
                                 std::span<const double> desired) {
    NlmsFilter<double> f(config);
    return record_trajectory(f, input, desired);
}

} // namespace vssnlms
