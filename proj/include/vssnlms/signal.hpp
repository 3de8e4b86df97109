#pragma once

// Seedable excitation and noise sources.
//
// Every generator is a deterministic function of its seed: the same
// (spec, seed) pair yields the same samples element for element on a
// given standard library. Prehistory is zero (x(n) = 0 for n < 0).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "wav.hpp"

namespace vssnlms {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Independent random streams consumed by one simulation run.
enum class Stream : std::uint64_t { input = 1, noise = 2, system = 3, envelope = 4 };

/// Sub-seed for stream `stream` of run `run` under `master`:
///   splitmix64(splitmix64(master ^ (stream * 0xD1B54A32D192ED03)) + run).
/// Distinct (run, stream) pairs give distinct generator states.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run,
                                    Stream stream) noexcept {
    const auto s = static_cast<std::uint64_t>(stream);
    return splitmix64(splitmix64(master ^ (s * 0xD1B54A32D192ED03ull)) + run);
}

enum class SignalKind { white_gaussian, ar1, wav_file, speech_like };

struct SignalSpec {
    SignalKind kind = SignalKind::white_gaussian;
    double variance = 1.0;  // target output power (white_gaussian, ar1)
    double pole = 0.0;      // ar1 only
    std::filesystem::path path;  // wav_file only
    std::uint64_t seed = 0;

    void validate() const {
        if (!(variance >= 0.0) || !std::isfinite(variance))
            throw ParameterError("input variance must be finite and >= 0, got " +
                                 std::to_string(variance));
        if (kind == SignalKind::ar1 && !(std::abs(pole) < 1.0))
            throw ParameterError("ar1 pole must satisfy |pole| < 1, got " + std::to_string(pole));
        if (kind == SignalKind::wav_file && path.empty())
            throw ParameterError("wav_file input requires a path");
    }
};

/// Zero-mean Gaussian stream with a fixed variance.
class WhiteNoise {
public:
    WhiteNoise(double variance, std::uint64_t seed) : rng_(seed), stddev_(checked_stddev(variance)) {}

    double next() { return stddev_ * unit_(rng_); }

private:
    static double checked_stddev(double variance) {
        if (!(variance >= 0.0) || !std::isfinite(variance))
            throw ParameterError("variance must be finite and >= 0, got " +
                                 std::to_string(variance));
        return std::sqrt(variance);
    }

    std::mt19937_64 rng_;
    std::normal_distribution<double> unit_{0.0, 1.0};
    double stddev_;
};

/// x(n) = pole * x(n-1) + u(n), driven so the stationary variance equals
/// `target_variance`; x(-1) = 0.
class Ar1Process {
public:
    Ar1Process(double pole, double target_variance, std::uint64_t seed)
        : pole_(checked_pole(pole)), drive_(target_variance * (1.0 - pole * pole), seed) {
        if (!(target_variance >= 0.0))
            throw ParameterError("ar1 target variance must be >= 0, got " +
                                 std::to_string(target_variance));
    }

    double next() {
        state_ = pole_ * state_ + drive_.next();
        return state_;
    }

private:
    static double checked_pole(double pole) {
        if (!(std::abs(pole) < 1.0))
            throw ParameterError("ar1 pole must satisfy |pole| < 1 (unstable recursion), got " +
                                 std::to_string(pole));
        return pole;
    }

    double pole_;
    WhiteNoise drive_;
    double state_ = 0.0;
};

inline std::vector<double> gen_white(std::size_t n_samples, double variance, std::uint64_t seed) {
    WhiteNoise src(variance, seed);
    std::vector<double> out(n_samples);
    for (auto& s : out) s = src.next();
    return out;
}

inline std::vector<double> gen_ar1(std::size_t n_samples, double pole, double target_variance,
                                   std::uint64_t seed) {
    Ar1Process src(pole, target_variance, seed);
    std::vector<double> out(n_samples);
    for (auto& s : out) s = src.next();
    return out;
}

/// Envelope layout of the synthetic speech stand-in.
struct SpeechLikeShape {
    static constexpr std::size_t period = 4000;   // one "utterance" plus pause
    static constexpr std::size_t active = 2800;   // voiced part per period
    static constexpr std::size_t ramp = 200;      // raised-cosine attack / release
    static constexpr std::size_t syllable = 800;  // inner modulation period
    static constexpr double carrier_pole = 0.9;
};

/// AR(1)-coloured noise (pole 0.9) under a slowly varying envelope with
/// 1200-sample silent gaps every 4000 samples, peak-normalized to 1.
/// Samples inside the gaps are exactly zero.
inline std::vector<double> gen_speech_like(std::size_t n_samples, std::uint64_t seed) {
    using S = SpeechLikeShape;
    std::vector<double> out(n_samples);
    if (n_samples == 0) return out;

    Ar1Process carrier(S::carrier_pole, 1.0, derive_seed(seed, 0, Stream::input));
    std::mt19937_64 env_rng(derive_seed(seed, 0, Stream::envelope));
    std::uniform_int_distribution<std::size_t> phase_dist(0, S::period - 1);
    std::uniform_real_distribution<double> level_dist(0.4, 1.0);

    const std::size_t phase = phase_dist(env_rng);
    std::size_t current_period = static_cast<std::size_t>(-1);
    double level = 1.0;

    for (std::size_t n = 0; n < n_samples; ++n) {
        const double c = carrier.next();
        const std::size_t t = n + phase;
        const std::size_t k = t / S::period;
        const std::size_t p = t % S::period;
        if (k != current_period) {
            current_period = k;
            level = level_dist(env_rng);
        }
        double env = 0.0;
        if (p < S::active) {
            double gate = 1.0;
            if (p < S::ramp)
                gate = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(p) / S::ramp);
            else if (p >= S::active - S::ramp)
                gate = 0.5 - 0.5 * std::cos(std::numbers::pi *
                                            static_cast<double>(S::active - p) / S::ramp);
            const double syl = std::abs(
                std::sin(std::numbers::pi * static_cast<double>(p) / S::syllable));
            env = level * gate * (0.3 + 0.7 * syl);
        }
        out[n] = env * c;
    }

    double peak = 0.0;
    for (double s : out) peak = std::max(peak, std::abs(s));
    if (peak > 0.0)
        for (auto& s : out) s /= peak;
    return out;
}

/// Materialize `n_samples` of the signal described by `spec`. For wav_file
/// inputs the first `n_samples` of the recording are used at the recorded
/// level (`variance` is ignored). speech_like output is rescaled so its mean
/// power over the `n_samples` equals `variance`.
inline std::vector<double> generate(const SignalSpec& spec, std::size_t n_samples) {
    spec.validate();
    switch (spec.kind) {
    case SignalKind::white_gaussian:
        return gen_white(n_samples, spec.variance, spec.seed);
    case SignalKind::ar1:
        return gen_ar1(n_samples, spec.pole, spec.variance, spec.seed);
    case SignalKind::speech_like: {
        auto x = gen_speech_like(n_samples, spec.seed);
        double power = 0.0;
        for (double v : x) power += v * v;
        if (power > 0.0) {
            const double gain = std::sqrt(spec.variance * static_cast<double>(n_samples) / power);
            for (auto& v : x) v *= gain;
        }
        return x;
    }
    case SignalKind::wav_file: {
        auto wav = load_wav(spec.path);
        if (wav.samples.size() < n_samples)
            throw IngestionError("data", "wav file " + spec.path.string() + " has " +
                                             std::to_string(wav.samples.size()) +
                                             " samples, " + std::to_string(n_samples) +
                                             " required");
        wav.samples.resize(n_samples);
        return std::move(wav.samples);
    }
    }
    throw ParameterError("unknown signal kind");
}

struct NoiseSegment {
    std::size_t start = 0;
    double variance = 0.0;
};

/// Piecewise-constant system-noise power sigma_v^2(n).
class NoiseSchedule {
public:
    NoiseSchedule() : NoiseSchedule(std::vector<NoiseSegment>{{0, 0.0}}) {}

    explicit NoiseSchedule(std::vector<NoiseSegment> segments) : segments_(std::move(segments)) {
        if (segments_.empty() || segments_.front().start != 0)
            throw ParameterError("noise schedule must start with a segment at iteration 0");
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            if (!(segments_[i].variance >= 0.0) || !std::isfinite(segments_[i].variance))
                throw ParameterError("noise segment " + std::to_string(i) +
                                     " variance must be finite and >= 0");
            if (i > 0 && segments_[i].start <= segments_[i - 1].start)
                throw ParameterError("noise segment starts must be strictly increasing (segment " +
                                     std::to_string(i) + ")");
        }
    }

    static NoiseSchedule constant(double variance) { return NoiseSchedule({{0, variance}}); }

    double variance_at(std::size_t n) const {
        auto it = std::upper_bound(segments_.begin(), segments_.end(), n,
                                   [](std::size_t v, const NoiseSegment& s) { return v < s.start; });
        return std::prev(it)->variance;
    }

    double max_variance() const {
        double m = 0.0;
        for (const auto& s : segments_) m = std::max(m, s.variance);
        return m;
    }

    const std::vector<NoiseSegment>& segments() const noexcept { return segments_; }

private:
    std::vector<NoiseSegment> segments_;
};

} // namespace vssnlms
