#pragma once

// System-identification scenarios, Monte Carlo ensembles and the
// measurements taken on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "filter_core.hpp"
#include "op_count.hpp"
#include "signal.hpp"
#include "theory.hpp"
#include "vss_control.hpp"

namespace vssnlms {

/// Reported misalignment when w(n) == w_o exactly.
inline constexpr double kMisalignmentFloorDb = -300.0;

/// Entries i.i.d. uniform on (0,1) (or (-0.5,0.5) when zero_mean), scaled to
/// unit squared norm.
inline TapVector<double> make_unknown_system(std::size_t taps, std::uint64_t seed,
                                             bool zero_mean = false) {
    if (taps == 0) throw ParameterError("M must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(zero_mean ? -0.5 : 0.0, zero_mean ? 0.5 : 1.0);
    std::vector<double> h(taps);
    double energy = 0.0;
    do {
        energy = 0.0;
        for (auto& v : h) {
            v = dist(rng);
            energy += v * v;
        }
    } while (energy == 0.0);
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& v : h) v *= scale;
    return TapVector<double>(std::move(h));
}

/// Synthetic room response h(k) = g(k) exp(-k / decay), g white Gaussian,
/// normalized to unit squared norm.
inline TapVector<double> make_echo_path(std::size_t taps, double decay, std::uint64_t seed) {
    if (taps == 0) throw ParameterError("M must be >= 1");
    if (!(decay > 0.0)) throw ParameterError("echo decay constant must be > 0");
    auto h = gen_white(taps, 1.0, seed);
    double energy = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
        h[k] *= std::exp(-static_cast<double>(k) / decay);
        energy += h[k] * h[k];
    }
    if (energy == 0.0) throw NumericError("degenerate echo path");
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& v : h) v *= scale;
    return TapVector<double>(std::move(h));
}

struct RandomSystem {
    std::uint64_t seed = 0;
    bool zero_mean = false;
};

struct EchoPathSystem {
    double decay = 64.0;
    std::uint64_t seed = 0;
};

struct ExplicitSystem {
    TapVector<double> taps{1};
};

using UnknownSystem = std::variant<RandomSystem, EchoPathSystem, ExplicitSystem>;

struct FixedNlms {
    double mu = 1.0;
    double delta = 1e-6;
};

struct VssNlms {
    VssParams params;
    double delta = 1e-6;
};

using Algorithm = std::variant<FixedNlms, VssNlms>;

inline std::string algorithm_id(const Algorithm& algo) {
    std::ostringstream os;
    os.precision(9);
    std::visit(
        [&](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, FixedNlms>)
                os << "nlms(mu=" << a.mu << ",delta=" << a.delta << ")";
            else
                os << "vss(mu_min=" << a.params.mu_min << ",mu_max=" << a.params.mu_max
                   << ",beta=" << a.params.beta << ",alpha=" << a.params.alpha
                   << ",rho=" << a.params.rho << ",delta=" << a.delta << ")";
        },
        algo);
    return os.str();
}

struct Scenario {
    std::size_t taps = 10;
    UnknownSystem system = RandomSystem{};
    std::optional<std::size_t> flip_iteration;  // w_o -> -w_o from this iteration on
    SignalSpec input;
    NoiseSchedule noise = NoiseSchedule::constant(0.01);
    std::size_t iterations = 2000;
    std::size_t runs = 1;
    std::uint64_t master_seed = 1;

    void validate() const {
        if (taps == 0) throw ParameterError("M must be >= 1");
        if (iterations == 0) throw ParameterError("iterations must be > 0");
        if (runs == 0) throw ParameterError("runs must be >= 1");
        if (flip_iteration && *flip_iteration >= iterations)
            throw ParameterError("flip iteration " + std::to_string(*flip_iteration) +
                                 " must be < iterations=" + std::to_string(iterations));
        if (const auto* e = std::get_if<ExplicitSystem>(&system); e && e->taps.size() != taps)
            throw StructuralError("explicit unknown system has " + std::to_string(e->taps.size()) +
                                  " taps, expected M=" + std::to_string(taps));
        if (const auto* e = std::get_if<EchoPathSystem>(&system); e && !(e->decay > 0.0))
            throw ParameterError("echo decay constant must be > 0");
        input.validate();
    }
};

inline TapVector<double> resolve_system(const Scenario& s) {
    return std::visit(
        [&](const auto& sys) -> TapVector<double> {
            using S = std::decay_t<decltype(sys)>;
            if constexpr (std::is_same_v<S, RandomSystem>)
                return make_unknown_system(s.taps, sys.seed, sys.zero_mean);
            else if constexpr (std::is_same_v<S, EchoPathSystem>)
                return make_echo_path(s.taps, sys.decay, sys.seed);
            else
                return sys.taps;
        },
        s.system);
}

/// Canonical text form of a scenario; hashed into trace metadata.
inline std::string describe(const Scenario& s) {
    std::ostringstream os;
    os.precision(17);
    os << "M=" << s.taps << ";iters=" << s.iterations << ";runs=" << s.runs
       << ";seed=" << s.master_seed << ";flip=";
    if (s.flip_iteration) os << *s.flip_iteration; else os << "none";
    os << ";input=" << static_cast<int>(s.input.kind) << "," << s.input.variance << ","
       << s.input.pole << "," << s.input.path.string();
    os << ";noise=";
    for (const auto& seg : s.noise.segments()) os << seg.start << ":" << seg.variance << ",";
    os << ";system=";
    std::visit(
        [&](const auto& sys) {
            using S = std::decay_t<decltype(sys)>;
            if constexpr (std::is_same_v<S, RandomSystem>)
                os << "random," << sys.seed << "," << sys.zero_mean;
            else if constexpr (std::is_same_v<S, EchoPathSystem>)
                os << "echo," << sys.decay << "," << sys.seed;
            else
                for (double v : sys.taps) os << v << ",";
        },
        s.system);
    return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// misalignment as a linear norm ratio ||w_o - w|| / ||w_o||.
inline double misalignment_ratio(std::span<const double> w, std::span<const double> w_o) {
    if (w.size() != w_o.size()) throw StructuralError("misalignment: length mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = w_o[i] - w[i];
        num += d * d;
        den += w_o[i] * w_o[i];
    }
    if (den == 0.0) throw ParameterError("misalignment undefined for an all-zero system");
    return std::sqrt(num / den);
}

inline double ratio_to_db(double ratio) {
    if (!(ratio > 0.0)) return kMisalignmentFloorDb;
    return std::max(kMisalignmentFloorDb, 20.0 * std::log10(ratio));
}

/// 20 log10(||w_o - w|| / ||w_o||), floored at kMisalignmentFloorDb.
inline double misalignment_db(std::span<const double> w, std::span<const double> w_o) {
    return ratio_to_db(misalignment_ratio(w, w_o));
}

/// Per-iteration record of one run or of an ensemble mean.
///
/// For ensembles every array is the arithmetic mean across runs, except
/// misalignment_db, which is 20 log10 of the mean norm ratio.
struct RunTrace {
    std::vector<double> misalignment_db;
    std::vector<double> norm_ratio;  // ||w_o - w(n)|| / ||w_o||, w(n) before the update
    std::vector<double> mu;
    std::vector<double> sigma_c2;    // NaN for fixed-step NLMS
    std::vector<double> e;
    std::vector<double> c;           // e(n) - v(n)
    std::vector<double> c_sq;        // c(n)^2 (mean of squares for ensembles)

    std::uint64_t scenario_hash = 0;
    std::string algorithm;
    std::string label;               // "run <i>" or "ensemble"
    std::size_t runs = 1;

    std::size_t size() const noexcept { return norm_ratio.size(); }

    void resize(std::size_t n) {
        for (auto* v : arrays()) v->assign(n, 0.0);
    }

    std::vector<std::vector<double>*> arrays() {
        return {&misalignment_db, &norm_ratio, &mu, &sigma_c2, &e, &c, &c_sq};
    }
};

namespace detail {

template <class Filter>
void simulate(Filter& filter, const Scenario& sc, std::span<const double> x,
              const TapVector<double>& w_o, std::uint64_t noise_seed, RunTrace& tr) {
    const TapVector<double> flipped = -w_o;
    RegressorBuffer<double> reference(sc.taps);
    WhiteNoise unit_noise(1.0, noise_seed);
    for (std::size_t n = 0; n < sc.iterations; ++n) {
        const bool after_flip = sc.flip_iteration && n >= *sc.flip_iteration;
        const TapVector<double>& sys = after_flip ? flipped : w_o;
        reference.push(x[n]);
        const double v = std::sqrt(sc.noise.variance_at(n)) * unit_noise.next();
        const double d = dot(sys.span(), reference.window()) + v;

        tr.norm_ratio[n] = misalignment_ratio(filter.weights().span(), sys.span());
        tr.misalignment_db[n] = ratio_to_db(tr.norm_ratio[n]);
        const auto rec = filter.step(x[n], d);
        tr.mu[n] = rec.mu;
        tr.sigma_c2[n] = rec.sigma_c2;
        tr.e[n] = rec.e;
        tr.c[n] = rec.e - v;
        tr.c_sq[n] = tr.c[n] * tr.c[n];
    }
}

} // namespace detail

/// One realization: sub-seeded input and noise, d(n) = w_o^T x(n) + v(n)
/// with the scheduled noise power and optional sign flip of w_o.
inline RunTrace run_once(const Scenario& scenario, const Algorithm& algorithm,
                         std::size_t run_index) {
    scenario.validate();
    const TapVector<double> w_o = resolve_system(scenario);

    SignalSpec in = scenario.input;
    in.seed = derive_seed(scenario.master_seed, run_index, Stream::input);
    const auto x = generate(in, scenario.iterations);
    const auto noise_seed = derive_seed(scenario.master_seed, run_index, Stream::noise);

    RunTrace tr;
    tr.resize(scenario.iterations);
    tr.scenario_hash = fnv1a(describe(scenario));
    tr.algorithm = algorithm_id(algorithm);
    tr.label = "run " + std::to_string(run_index);

    std::visit(
        [&](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            NlmsConfig cfg{.taps = scenario.taps, .delta = a.delta, .mu = 1.0};
            if constexpr (std::is_same_v<A, FixedNlms>) {
                cfg.mu = a.mu;
                NlmsFilter<double> f(cfg);
                detail::simulate(f, scenario, x, w_o, noise_seed, tr);
            } else {
                VssNlmsFilter<double> f(a.params, cfg);
                detail::simulate(f, scenario, x, w_o, noise_seed, tr);
            }
        },
        algorithm);
    return tr;
}

/// Mean over `runs` independent realizations. Runs execute in batches on up
/// to `threads` workers (0 = hardware concurrency); each batch is reduced in
/// run-index order, so the result does not depend on the schedule.
inline RunTrace run_ensemble(const Scenario& scenario, const Algorithm& algorithm,
                             unsigned threads = 0) {
    scenario.validate();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n = scenario.iterations;
    const std::size_t batch = std::min<std::size_t>(threads, scenario.runs);

    RunTrace acc;
    acc.resize(n);
    std::vector<RunTrace> slots(batch);

    for (std::size_t first = 0; first < scenario.runs; first += batch) {
        const std::size_t count = std::min(batch, scenario.runs - first);
        std::vector<std::exception_ptr> errors(count);
        {
            std::vector<std::jthread> workers;
            for (std::size_t k = 0; k < count; ++k) {
                auto job = [&, k] {
                    try {
                        slots[k] = run_once(scenario, algorithm, first + k);
                    } catch (...) {
                        errors[k] = std::current_exception();
                    }
                };
                if (count == 1) job(); else workers.emplace_back(job);
            }
        }
        for (std::size_t k = 0; k < count; ++k) {
            if (errors[k]) {
                try {
                    std::rethrow_exception(errors[k]);
                } catch (const std::exception& ex) {
                    throw EnsembleError(first + k, ex.what());
                }
            }
            const RunTrace& r = slots[k];
            for (std::size_t i = 0; i < n; ++i) {
                acc.norm_ratio[i] += r.norm_ratio[i];
                acc.mu[i] += r.mu[i];
                acc.sigma_c2[i] += r.sigma_c2[i];
                acc.e[i] += r.e[i];
                acc.c[i] += r.c[i];
                acc.c_sq[i] += r.c_sq[i];
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(scenario.runs);
    for (std::size_t i = 0; i < n; ++i) {
        acc.norm_ratio[i] *= inv;
        acc.mu[i] *= inv;
        acc.sigma_c2[i] *= inv;
        acc.e[i] *= inv;
        acc.c[i] *= inv;
        acc.c_sq[i] *= inv;
        acc.misalignment_db[i] = ratio_to_db(acc.norm_ratio[i]);
    }
    acc.scenario_hash = fnv1a(describe(scenario));
    acc.algorithm = algorithm_id(algorithm);
    acc.label = scenario.runs == 1 ? "run 0" : "ensemble";
    acc.runs = scenario.runs;
    return acc;
}

/// Index where the trailing `fraction` of a length-n trace begins.
inline std::size_t window_start(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ParameterError("window fraction must lie in (0, 1]");
    const auto len = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
    return n - std::min(len, n);
}

inline double mean_of(std::span<const double> v, std::size_t begin, std::size_t end) {
    if (begin >= end) throw ParameterError("empty averaging window");
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += v[i];
    return s / static_cast<double>(end - begin);
}

inline double tail_mean(std::span<const double> v, double fraction) {
    return mean_of(v, window_start(v.size(), fraction), v.size());
}

/// Misalignment floor (dB) of the mean norm ratio over [begin, end).
inline double floor_db(const RunTrace& tr, std::size_t begin, std::size_t end) {
    return ratio_to_db(mean_of(tr.norm_ratio, begin, end));
}

inline double steady_floor_db(const RunTrace& tr, double fraction = 0.25) {
    return floor_db(tr, window_start(tr.size(), fraction), tr.size());
}

/// First k in [begin, end] such that misalignment_db[n] <= floor + margin for
/// every n in [k, end). Returns `end` if the last sample is still above.
inline std::size_t convergence_iteration(const RunTrace& tr, double floor, double margin_db = 3.0,
                                         std::size_t begin = 0,
                                         std::optional<std::size_t> end = std::nullopt) {
    const std::size_t stop = std::min(end.value_or(tr.size()), tr.size());
    std::size_t k = stop;
    while (k > begin && tr.misalignment_db[k - 1] <= floor + margin_db) --k;
    return k;
}

/// Steady-state EMSE: mean of c(n)^2 over the final `window_fraction` of
/// the trace. Warns if the misalignment has not settled by the window start.
inline double measure_emse(const RunTrace& tr, double window_fraction = 0.25) {
    const std::size_t start = window_start(tr.size(), window_fraction);
    const double floor = floor_db(tr, start, tr.size());
    const std::size_t settled = convergence_iteration(tr, floor, 3.0);
    if (settled > start)
        warn("steady-state window starts at iteration " + std::to_string(start) +
             " but the misalignment settles only at iteration " + std::to_string(settled));
    return mean_of(tr.c_sq, start, tr.size());
}

/// Arithmetic cost of one iteration, measured by running the filter on
/// Counted<double> after the delay line has been filled.
inline OpCounts count_arithmetic(const Algorithm& algorithm, std::size_t taps) {
    if (taps == 0) throw ParameterError("M must be >= 1");
    return std::visit(
        [&](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            using C = Counted<double>;
            NlmsConfig cfg{.taps = taps, .delta = a.delta, .mu = 1.0};
            auto measure = [&](auto& filter) {
                for (std::size_t n = 0; n < taps + 2; ++n)
                    filter.step(C(std::sin(0.7 * static_cast<double>(n + 1))),
                                C(std::cos(0.3 * static_cast<double>(n))));
                reset_op_counts();
                filter.step(C(0.25), C(-0.5));
                const OpCounts counts = op_counts();
                reset_op_counts();
                return counts;
            };
            if constexpr (std::is_same_v<A, FixedNlms>) {
                cfg.mu = a.mu;
                NlmsFilter<C> f(cfg);
                return measure(f);
            } else {
                VssNlmsFilter<C> f(a.params, cfg);
                return measure(f);
            }
        },
        algorithm);
}

} // namespace vssnlms
