// vssnlms: run variable-step NLMS experiments, evaluate the steady-state
// theory, and export plot-ready CSV traces.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vssnlms/vssnlms.hpp"

namespace {

using namespace vssnlms;

struct CommonOpts {
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> iters;
    unsigned threads = 0;
    bool quiet = false;
};

struct FilterOpts {
    std::string algorithm = "vss";
    double mu = 1.0;
    double mu_min = 0.001;
    double mu_max = 1.2;
    std::optional<double> beta;
    double kappa = 2.0;
    std::optional<double> alpha;
    double rho = 1e-6;
    std::optional<double> delta;
    std::optional<double> snr_db;
};

struct ScenarioOpts {
    std::size_t taps = 10;
    std::string input = "white";
    double input_variance = 1.0;
    double pole = 0.5;
    std::filesystem::path wav;
    std::string system = "random";
    std::uint64_t system_seed = 1;
    double decay = 64.0;
    std::optional<std::size_t> flip;
    std::vector<std::string> noise{"0:0.01"};
    bool theory_check = false;
    double tolerance = 0.15;
    double window = 0.25;
    std::optional<std::filesystem::path> echo_file;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--out", c.out, "CSV output path (omit to skip the file)");
    cmd->add_option("--seed", c.seed, "master seed for input and noise streams");
    cmd->add_option("--runs", c.runs, "independent runs in the ensemble")->check(CLI::PositiveNumber);
    cmd->add_option("--iters", c.iters, "iterations per run")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
    cmd->add_flag("--quiet", c.quiet, "print only the measured results");
}

void add_filter(CLI::App* cmd, FilterOpts& f) {
    cmd->add_option("--algorithm", f.algorithm, "vss or nlms")
        ->check(CLI::IsMember({"vss", "nlms"}));
    cmd->add_option("--mu", f.mu, "fixed step size (nlms)");
    cmd->add_option("--mu-min", f.mu_min, "minimum step size");
    cmd->add_option("--mu-max", f.mu_max, "maximum step size");
    cmd->add_option("--beta", f.beta, "step-size law sharpness (default 20)");
    cmd->add_option("--kappa", f.kappa, "alpha = 1 - 1/(kappa M)");
    cmd->add_option("--alpha", f.alpha, "weighting factor, overrides --kappa");
    cmd->add_option("--rho", f.rho, "denominator guard of the tracking-error estimate");
    cmd->add_option("--delta", f.delta, "NLMS regularization");
    cmd->add_option("--snr-db", f.snr_db,
                    "SNR in dB; converted to linear and used for "
                    "delta = M(1+sqrt(1+SNR))sigma_x^2/SNR");
}

void add_scenario(CLI::App* cmd, ScenarioOpts& s, bool aec) {
    cmd->add_option("--M", s.taps, "filter length")->check(CLI::PositiveNumber);
    if (!aec) {
        cmd->add_option("--input", s.input, "white, ar1, wav or speech")
            ->check(CLI::IsMember({"white", "ar1", "wav", "speech"}));
        cmd->add_option("--pole", s.pole, "AR(1) pole");
        cmd->add_option("--system", s.system, "random, random-zero-mean or echo")
            ->check(CLI::IsMember({"random", "random-zero-mean", "echo"}));
        cmd->add_flag("--theory-check", s.theory_check,
                      "compare the measured EMSE with the closed-form prediction");
        cmd->add_option("--tolerance", s.tolerance, "relative tolerance of --theory-check");
    } else {
        cmd->add_option("--echo-file", s.echo_file, "explicit echo path coefficients")
            ->check(CLI::ExistingFile);
    }
    cmd->add_option("--input-variance", s.input_variance,
                    "input power (white, ar1; mean power of the synthetic speech)");
    cmd->add_option("--wav", s.wav, "mono 16-bit PCM input")->check(CLI::ExistingFile);
    cmd->add_option("--system-seed", s.system_seed, "seed of the unknown system");
    cmd->add_option("--decay", s.decay, "echo path decay constant in taps");
    cmd->add_option("--flip", s.flip, "iteration at which w_o becomes -w_o");
    cmd->add_option("--noise", s.noise,
                    "noise schedule segments start:variance (repeatable), e.g. 0:0.01 1000:0.09");
    cmd->add_option("--window", s.window, "steady-state window as a fraction of the run");
}

NoiseSchedule parse_noise(const std::vector<std::string>& items) {
    std::vector<NoiseSegment> segs;
    for (const auto& item : items) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ParameterError("noise segment '" + item + "' is not start:variance");
        try {
            segs.push_back({std::stoul(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
        } catch (const std::logic_error&) {
            throw ParameterError("noise segment '" + item + "' is not start:variance");
        }
    }
    return NoiseSchedule(std::move(segs));
}

ExperimentConfig build(const CommonOpts& c, const FilterOpts& f, const ScenarioOpts& s, bool aec) {
    ExperimentConfig cfg;
    Scenario& sc = cfg.scenario;
    sc.taps = s.taps;
    sc.iterations = c.iters.value_or(aec ? 20000 : 2000);
    sc.runs = c.runs.value_or(1);
    sc.master_seed = c.seed.value_or(1);
    sc.flip_iteration = s.flip;
    sc.noise = parse_noise(s.noise);
    sc.input.variance = s.input_variance;

    if (aec) {
        sc.system = EchoPathSystem{s.decay, s.system_seed};
        if (!s.wav.empty()) {
            sc.input.kind = SignalKind::wav_file;
            sc.input.path = s.wav;
        } else {
            sc.input.kind = SignalKind::speech_like;
        }
        cfg.echo_file = s.echo_file;
    } else {
        if (s.system == "echo")
            sc.system = EchoPathSystem{s.decay, s.system_seed};
        else
            sc.system = RandomSystem{s.system_seed, s.system == "random-zero-mean"};
        sc.input.pole = s.pole;
        if (s.input == "white") sc.input.kind = SignalKind::white_gaussian;
        else if (s.input == "ar1") sc.input.kind = SignalKind::ar1;
        else if (s.input == "speech") sc.input.kind = SignalKind::speech_like;
        else {
            sc.input.kind = SignalKind::wav_file;
            sc.input.path = s.wav;
        }
    }

    if (f.algorithm == "nlms") {
        cfg.algorithm = FixedNlms{f.mu, 1e-6};
    } else {
        VssParams p{.mu_min = f.mu_min, .mu_max = f.mu_max, .beta = f.beta.value_or(20.0),
                    .alpha = f.alpha ? *f.alpha : default_alpha(s.taps, f.kappa), .rho = f.rho};
        cfg.algorithm = VssNlms{p, 1e-6};
    }
    cfg.delta = f.delta;
    cfg.snr_db = f.snr_db;
    cfg.out = c.out;
    cfg.theory_check = s.theory_check;
    cfg.theory_tolerance = s.tolerance;
    cfg.window_fraction = s.window;
    cfg.threads = c.threads;
    cfg.quiet = c.quiet;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variable-step-size NLMS experiments: system identification, echo "
                 "cancellation and steady-state theory"};
    app.set_config("--config", "", "INI-style config; [sim], [aec] and [theory] sections");
    app.require_subcommand(1);
    app.fallthrough();

    CommonOpts common;
    FilterOpts sim_filter, aec_filter;
    ScenarioOpts sim_scn, aec_scn;
    aec_scn.taps = 512;
    aec_scn.flip = 10000;

    auto* sim = app.add_subcommand("sim", "system-identification ensemble, CSV trace");
    add_common(sim, common);
    add_filter(sim, sim_filter);
    add_scenario(sim, sim_scn, false);

    auto* aec = app.add_subcommand("aec", "acoustic echo cancellation run, CSV trace");
    add_common(aec, common);
    add_filter(aec, aec_filter);
    add_scenario(aec, aec_scn, true);

    SteadyStateInputs th;
    th.taps = 64;
    th.sigma_v2 = 0.01;
    th.beta = 20.0;
    double th_kappa = 2.0;
    std::optional<double> th_alpha;
    auto* theory = app.add_subcommand("theory", "steady-state predictions");
    theory->add_option("--M", th.taps, "filter length")->check(CLI::PositiveNumber);
    theory->add_option("--kappa", th_kappa, "alpha = 1 - 1/(kappa M)");
    theory->add_option("--alpha", th_alpha, "weighting factor, overrides --kappa");
    theory->add_option("--beta", th.beta, "step-size law sharpness");
    theory->add_option("--mu-min", th.mu_min, "minimum step size");
    theory->add_option("--mu-max", th.mu_max, "maximum step size");
    theory->add_option("--sigma-v2", th.sigma_v2, "system noise power");
    theory->add_option("--sigma-x2", th.sigma_x2, "input power");
    theory->add_option("--delta", th.delta, "regularization");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*theory) {
            th.alpha = th_alpha ? *th_alpha : default_alpha(th.taps, th_kappa);
            return cmd_theory(th, std::cout);
        }
        if (*sim) return cmd_sim(build(common, sim_filter, sim_scn, false), std::cout);
        return cmd_aec(build(common, aec_filter, aec_scn, true), std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
}
