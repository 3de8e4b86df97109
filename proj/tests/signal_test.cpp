#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "test_support.hpp"
#include "vssnlms/signal.hpp"

namespace vssnlms {
namespace {

double sample_mean(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
    const double m = sample_mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

TEST(GenWhite, EmptyRequest) { EXPECT_TRUE(gen_white(0, 1.0, 7).empty()); }

TEST(GenWhite, MomentsMatchPopulation) {
    const auto x = gen_white(100000, 1.0, 7);
    ASSERT_EQ(x.size(), 100000u);
    EXPECT_NEAR(sample_mean(x), 0.0, 0.02);
    EXPECT_NEAR(sample_variance(x), 1.0, 0.03);
}

TEST(GenWhite, ZeroVarianceIsSilent) {
    const auto x = gen_white(100000, 0.0, 7);
    EXPECT_TRUE(std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; }));
}

TEST(GenWhite, NegativeVarianceRejected) {
    EXPECT_THROW(gen_white(10, -1.0, 7), ParameterError);
}

TEST(GenWhite, SameSeedSameStream) {
    EXPECT_EQ(gen_white(5000, 2.5, 99), gen_white(5000, 2.5, 99));
    EXPECT_NE(gen_white(50, 2.5, 99), gen_white(50, 2.5, 100));
}

TEST(GenAr1, ZeroPoleIsWhite) {
    EXPECT_EQ(gen_ar1(10000, 0.0, 1.7, 123), gen_white(10000, 1.7, 123));
}

TEST(GenAr1, LagOneAutocorrelationEqualsPole) {
    const auto x = gen_ar1(200000, 0.5, 1.0, 7);
    const double m = sample_mean(x);
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        den += (x[n] - m) * (x[n] - m);
        if (n > 0) num += (x[n] - m) * (x[n - 1] - m);
    }
    EXPECT_NEAR(num / den, 0.5, 0.02);
}

TEST(GenAr1, StationaryVarianceIsTarget) {
    EXPECT_NEAR(sample_variance(gen_ar1(200000, 0.5, 1.0, 7)), 1.0, 0.05);
    EXPECT_NEAR(sample_variance(gen_ar1(200000, -0.8, 2.0, 8)), 2.0, 0.1);
}

TEST(GenAr1, UnstablePoleRejected) {
    EXPECT_THROW(gen_ar1(10, 1.0, 1.0, 1), ParameterError);
    EXPECT_THROW(gen_ar1(10, -1.5, 1.0, 1), ParameterError);
}

TEST(GenAr1, Reproducible) {
    EXPECT_EQ(gen_ar1(3000, 0.5, 1.0, 4), gen_ar1(3000, 0.5, 1.0, 4));
}

TEST(GenSpeechLike, Empty) { EXPECT_TRUE(gen_speech_like(0, 3).empty()); }

TEST(GenSpeechLike, HasSilentGapsAndUnitPeak) {
    const auto x = gen_speech_like(40000, 3);
    ASSERT_EQ(x.size(), 40000u);

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    EXPECT_EQ(peak, 1.0);

    std::size_t longest = 0, run = 0, quiet = 0;
    for (double v : x) {
        if (std::abs(v) < 1e-3) {
            ++quiet;
            longest = std::max(longest, ++run);
        } else {
            run = 0;
        }
    }
    EXPECT_GE(longest, 400u);
    EXPECT_GE(static_cast<double>(quiet) / static_cast<double>(x.size()), 0.20);
}

TEST(GenSpeechLike, Reproducible) {
    EXPECT_EQ(gen_speech_like(9000, 11), gen_speech_like(9000, 11));
    EXPECT_NE(gen_speech_like(9000, 11), gen_speech_like(9000, 12));
}

TEST(Generate, SpeechLikeAtRequestedPower) {
    SignalSpec s{.kind = SignalKind::speech_like, .variance = 2.0, .path = {}, .seed = 4};
    const auto x = generate(s, 20000);
    double power = 0.0;
    for (double v : x) power += v * v;
    EXPECT_NEAR(power / 20000.0, 2.0, 1e-12);
    const auto raw = gen_speech_like(20000, 4);
    for (std::size_t n = 0; n < x.size(); ++n) ASSERT_EQ(x[n] == 0.0, raw[n] == 0.0);
    s.variance = 0.0;
    const auto silent = generate(s, 100);
    EXPECT_TRUE(std::all_of(silent.begin(), silent.end(), [](double v) { return v == 0.0; }));
}

TEST(DeriveSeed, DistinctAcrossRunsAndStreams) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t run = 0; run < 1000; ++run)
        for (Stream s : {Stream::input, Stream::noise, Stream::system, Stream::envelope})
            seen.insert(derive_seed(42, run, s));
    EXPECT_EQ(seen.size(), 4000u);
    EXPECT_NE(derive_seed(1, 0, Stream::input), derive_seed(2, 0, Stream::input));
}

TEST(DeriveSeed, RunStreamsDiffer) {
    EXPECT_NE(gen_white(100, 1.0, derive_seed(5, 0, Stream::input)),
              gen_white(100, 1.0, derive_seed(5, 1, Stream::input)));
}

TEST(NoiseSchedule, PiecewiseConstant) {
    NoiseSchedule s({{0, 0.01}, {1000, 0.09}});
    EXPECT_EQ(s.variance_at(0), 0.01);
    EXPECT_EQ(s.variance_at(999), 0.01);
    EXPECT_EQ(s.variance_at(1000), 0.09);
    EXPECT_EQ(s.variance_at(1000000), 0.09);
    EXPECT_EQ(s.max_variance(), 0.09);
}

TEST(NoiseSchedule, Validation) {
    EXPECT_THROW(NoiseSchedule({{5, 0.01}}), ParameterError);
    EXPECT_THROW(NoiseSchedule({{0, 0.01}, {0, 0.02}}), ParameterError);
    EXPECT_THROW(NoiseSchedule({{0, 0.01}, {100, -1.0}}), ParameterError);
    EXPECT_THROW(NoiseSchedule(std::vector<NoiseSegment>{}), ParameterError);
}

TEST(SignalSpec, Validation) {
    SignalSpec s;
    s.variance = -1;
    EXPECT_THROW(s.validate(), ParameterError);
    s = {};
    s.kind = SignalKind::ar1;
    s.pole = 1.0;
    EXPECT_THROW(s.validate(), ParameterError);
    s = {};
    s.kind = SignalKind::wav_file;
    EXPECT_THROW(s.validate(), ParameterError);
}

TEST(Generate, WavFileTakesPrefix) {
    testing::TempDir dir("gen");
    const std::vector<double> samples{0.0, 0.25, -0.5, 0.125};
    save_wav16(dir / "a.wav", samples);
    SignalSpec s{.kind = SignalKind::wav_file, .path = dir / "a.wav"};
    EXPECT_EQ(generate(s, 3), (std::vector<double>{0.0, 0.25, -0.5}));
    EXPECT_THROW(generate(s, 5), IngestionError);
}

} // namespace
} // namespace vssnlms
