#pragma once

// Experiment commands behind the `vssnlms` executable. Each command takes a
// fully populated config, writes its artifacts, reports on `log`, and
// returns the process exit status: 0 iff every requested output was written
// and every enabled theory check passed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sim_harness.hpp"
#include "theory.hpp"
#include "trace_csv.hpp"
#include "vss_control.hpp"

namespace vssnlms {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;       // runtime / I/O failure
inline constexpr int kExitInvalid = 2;       // rejected configuration
inline constexpr int kExitCheckFailed = 3;   // outputs written, theory check out of tolerance

struct ExperimentConfig {
    Scenario scenario;
    Algorithm algorithm = VssNlms{};
    std::filesystem::path out;            // CSV path; empty = no file
    std::optional<double> delta;          // explicit regularization
    std::optional<double> snr_db;         // derive delta from the SNR rule
    std::optional<std::filesystem::path> echo_file;  // aec: explicit echo path coefficients
    bool theory_check = false;
    double theory_tolerance = 0.15;       // relative
    double window_fraction = 0.25;
    std::size_t running_window = 100;
    unsigned threads = 0;
    bool quiet = false;
};

/// Whitespace-separated coefficients, '#' starts a comment.
inline TapVector<double> load_coefficients(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("path", "cannot open coefficient file: " + path.string());
    std::vector<double> taps;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        ls.imbue(std::locale::classic());
        double v;
        while (ls >> v) taps.push_back(v);
        if (!ls.eof())
            throw IngestionError("coefficients", path.string() + ":" + std::to_string(line_no) +
                                                     ": not a number");
    }
    if (taps.empty()) throw IngestionError("coefficients", path.string() + ": no coefficients");
    return TapVector<double>(std::move(taps));
}

namespace detail {

inline std::string sci(double v, int sig = 5) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", sig - 1, v);
    return buf;
}

inline double& algorithm_delta(Algorithm& a) {
    return std::visit([](auto& alg) -> double& { return alg.delta; }, a);
}

inline double mean_power(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v * v;
    return s / static_cast<double>(x.size());
}

// Rejects beta at or above the steady-state bound for the strictest noise
// segment.
inline void check_beta(const Scenario& sc, const VssNlms& v) {
    SteadyStateInputs in{.taps = sc.taps, .alpha = v.params.alpha, .beta = v.params.beta,
                         .mu_min = v.params.mu_min, .mu_max = v.params.mu_max,
                         .sigma_v2 = sc.noise.max_variance(), .sigma_x2 = 1.0, .delta = 0.0};
    const double bound = beta_upper_bound(in);
    if (!(v.params.beta < bound)) throw BetaBoundError(v.params.beta, bound);
}

inline void write_csv(const ExperimentConfig& cfg, const RunTrace& tr, std::ostream& log) {
    if (cfg.out.empty()) return;
    std::ofstream os(cfg.out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + cfg.out.string());
    write_trace_csv(os, tr, cfg.running_window);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + cfg.out.string());
    if (!cfg.quiet) log << "wrote " << tr.size() << " rows to " << cfg.out.string() << '\n';
}

template <class Body>
int guarded(std::ostream& log, Body&& body) {
    try {
        return body();
    } catch (const ParameterError& e) {
        log << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const StructuralError& e) {
        log << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace detail

/// Resolve delta: explicit value, else the SNR rule at `input_power`, else `fallback`.
inline double resolve_delta(const ExperimentConfig& cfg, double input_power, double fallback) {
    if (cfg.delta) return *cfg.delta;
    if (cfg.snr_db) {
        const double snr = db_to_linear(*cfg.snr_db);
        return regularization_delta(cfg.scenario.taps, input_power, snr);
    }
    return fallback;
}

/// System-identification ensemble; writes the trace CSV and reports the
/// steady-state EMSE, optionally against the closed-form prediction.
inline int cmd_sim(const ExperimentConfig& config, std::ostream& log) {
    return detail::guarded(log, [&] {
        ExperimentConfig cfg = config;
        cfg.scenario.validate();
        // Recordings keep their own level; the other sources are generated at
        // the requested power.
        const double input_power = cfg.scenario.input.kind == SignalKind::wav_file
                                       ? detail::mean_power(generate(cfg.scenario.input,
                                                                     cfg.scenario.iterations))
                                       : cfg.scenario.input.variance;
        double& delta = detail::algorithm_delta(cfg.algorithm);
        delta = resolve_delta(cfg, input_power, delta);
        if (cfg.snr_db && !cfg.quiet)
            log << "snr " << *cfg.snr_db << " dB = " << db_to_linear(*cfg.snr_db)
                << " linear, delta = " << delta << '\n';
        if (!(delta > 0.0)) throw ParameterError("regularization delta must be > 0");
        if (const auto* v = std::get_if<VssNlms>(&cfg.algorithm)) {
            v->params.validate();
            detail::check_beta(cfg.scenario, *v);
        }

        const RunTrace tr = run_ensemble(cfg.scenario, cfg.algorithm, cfg.threads);
        detail::write_csv(cfg, tr, log);

        const double measured = measure_emse(tr, cfg.window_fraction);
        if (!cfg.quiet) {
            log << "algorithm           " << tr.algorithm << '\n';
            log << "runs x iterations   " << cfg.scenario.runs << " x " << cfg.scenario.iterations
                << '\n';
            log << "final misalignment  " << tr.misalignment_db.back() << " dB\n";
            log << "steady floor        " << steady_floor_db(tr, cfg.window_fraction) << " dB\n";
        }
        log << "measured_emse       " << detail::sci(measured) << '\n';

        if (!cfg.theory_check) return kExitOk;
        const auto* v = std::get_if<VssNlms>(&cfg.algorithm);
        double predicted;
        const double sigma_v2 = cfg.scenario.noise.variance_at(cfg.scenario.iterations - 1);
        if (v) {
            predicted = steady_emse({.taps = cfg.scenario.taps, .alpha = v->params.alpha,
                                     .beta = v->params.beta, .mu_min = v->params.mu_min,
                                     .mu_max = v->params.mu_max, .sigma_v2 = sigma_v2,
                                     .sigma_x2 = input_power, .delta = 0.0});
        } else {
            predicted = misadjustment(std::get<FixedNlms>(cfg.algorithm).mu) * sigma_v2;
        }
        const double rel = predicted > 0.0 ? std::abs(measured - predicted) / predicted
                                           : std::abs(measured);
        const bool pass = rel <= cfg.theory_tolerance;
        log << "predicted_emse      " << detail::sci(predicted) << '\n';
        log << "relative_error      " << detail::sci(rel, 4) << " (tolerance "
            << cfg.theory_tolerance << ") " << (pass ? "PASS" : "FAIL") << '\n';
        return pass ? kExitOk : kExitCheckFailed;
    });
}

/// Prints E[mu(inf)], xi_ex, MSD(inf) and beta_max to 5 significant figures.
inline int cmd_theory(const SteadyStateInputs& in, std::ostream& out) {
    return detail::guarded(out, [&] {
        in.validate();
        out << "M            " << in.taps << '\n';
        out << "alpha        " << detail::sci(in.alpha, 8) << '\n';
        out << "beta         " << in.beta << '\n';
        out << "sigma_v2     " << in.sigma_v2 << '\n';
        out << "E[mu_inf]    " << detail::sci(expected_steady_mu(in)) << '\n';
        out << "beta_max     " << detail::sci(beta_upper_bound(in)) << '\n';
        out << "xi_ex        " << detail::sci(steady_emse(in)) << '\n';
        out << "MSD_inf      " << detail::sci(steady_msd(in)) << '\n';
        return kExitOk;
    });
}

/// Acoustic echo cancellation: one realization of a long echo path excited
/// by speech (a WAV recording or the synthetic stand-in), with a sign flip
/// of the echo path.
inline int cmd_aec(const ExperimentConfig& config, std::ostream& log) {
    return detail::guarded(log, [&] {
        ExperimentConfig cfg = config;
        if (cfg.scenario.runs != 1) {
            if (!cfg.quiet) log << "note: aec uses a single realization; runs set to 1\n";
            cfg.scenario.runs = 1;
        }
        if (cfg.echo_file) cfg.scenario.system = ExplicitSystem{load_coefficients(*cfg.echo_file)};
        cfg.scenario.validate();

        SignalSpec in = cfg.scenario.input;
        in.seed = derive_seed(cfg.scenario.master_seed, 0, Stream::input);
        const double power = detail::mean_power(generate(in, cfg.scenario.iterations));
        const double sigma_v2 = cfg.scenario.noise.variance_at(0);

        double fallback = 1e-6;
        if (power > 0.0 && sigma_v2 > 0.0)
            fallback = regularization_delta(cfg.scenario.taps, power, power / sigma_v2);
        double& delta = detail::algorithm_delta(cfg.algorithm);
        delta = resolve_delta(cfg, power, fallback);
        if (!(delta > 0.0)) throw ParameterError("regularization delta must be > 0");
        if (const auto* v = std::get_if<VssNlms>(&cfg.algorithm)) {
            v->params.validate();
            detail::check_beta(cfg.scenario, *v);
        }

        const RunTrace tr = run_once(cfg.scenario, cfg.algorithm, 0);
        for (std::size_t n = 0; n < tr.size(); ++n)
            if (!std::isfinite(tr.misalignment_db[n]) || !std::isfinite(tr.mu[n]) ||
                !std::isfinite(tr.e[n]))
                throw NumericError("non-finite value at iteration " + std::to_string(n));
        detail::write_csv(cfg, tr, log);

        if (!cfg.quiet) {
            log << "input power         " << detail::sci(power) << '\n';
            log << "delta               " << detail::sci(delta) << '\n';
        }
        if (const auto flip = cfg.scenario.flip_iteration; flip && *flip > 0) {
            const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(500, *flip / 10));
            const double pre = floor_db(tr, *flip - std::min(w, *flip), *flip);
            const std::size_t end = tr.size();
            const double post = floor_db(tr, end - std::min(w, end - *flip), end);
            log << "pre_flip_floor_db   " << pre << '\n';
            log << "final_floor_db      " << post << '\n';
        }
        log << "final misalignment  " << tr.misalignment_db.back() << " dB\n";
        return kExitOk;
    });
}

} // namespace vssnlms
