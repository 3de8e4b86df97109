#pragma once

// Instrumented scalar for auditing per-iteration arithmetic cost.
//
// Counting convention: '+' and '-' are additions, '*' and '/' are
// multiplications, exp/expm1 are exponents, sqrt is a square root.
// Unary negation, comparisons and conversions are free.

#include <cmath>
#include <compare>
#include <concepts>
#include <cstdint>

namespace vssnlms {

struct OpCounts {
    std::uint64_t multiplications = 0;
    std::uint64_t additions = 0;
    std::uint64_t exponents = 0;
    std::uint64_t square_roots = 0;

    friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

namespace detail {
inline thread_local OpCounts tls_op_counts;
}

inline OpCounts& op_counts() noexcept { return detail::tls_op_counts; }
inline void reset_op_counts() noexcept { detail::tls_op_counts = {}; }

template <std::floating_point T>
constexpr T value_of(T x) noexcept { return x; }

template <std::floating_point T>
class Counted {
public:
    Counted() = default;
    constexpr Counted(T v) noexcept : v_(v) {}  // NOLINT(google-explicit-constructor)

    constexpr T value() const noexcept { return v_; }

    friend Counted operator+(Counted a, Counted b) noexcept {
        ++op_counts().additions;
        return a.v_ + b.v_;
    }
    friend Counted operator-(Counted a, Counted b) noexcept {
        ++op_counts().additions;
        return a.v_ - b.v_;
    }
    friend Counted operator*(Counted a, Counted b) noexcept {
        ++op_counts().multiplications;
        return a.v_ * b.v_;
    }
    friend Counted operator/(Counted a, Counted b) noexcept {
        ++op_counts().multiplications;
        return a.v_ / b.v_;
    }
    friend Counted operator-(Counted a) noexcept { return -a.v_; }

    Counted& operator+=(Counted b) noexcept { return *this = *this + b; }
    Counted& operator-=(Counted b) noexcept { return *this = *this - b; }
    Counted& operator*=(Counted b) noexcept { return *this = *this * b; }
    Counted& operator/=(Counted b) noexcept { return *this = *this / b; }

    friend bool operator==(Counted a, Counted b) noexcept { return a.v_ == b.v_; }
    friend auto operator<=>(Counted a, Counted b) noexcept { return a.v_ <=> b.v_; }

    friend Counted exp(Counted a) noexcept {
        ++op_counts().exponents;
        return std::exp(a.v_);
    }
    friend Counted expm1(Counted a) noexcept {
        ++op_counts().exponents;
        return std::expm1(a.v_);
    }
    friend Counted sqrt(Counted a) noexcept {
        ++op_counts().square_roots;
        return std::sqrt(a.v_);
    }
    friend constexpr T value_of(Counted a) noexcept { return a.v_; }

private:
    T v_{};
};

} // namespace vssnlms
