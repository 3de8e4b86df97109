#pragma once

// Plot-ready per-iteration export. Locale-independent: numbers go through
// std::to_chars, so the decimal separator is always '.'.

#include <charconv>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sim_harness.hpp"

namespace vssnlms {

inline constexpr std::string_view kTraceCsvHeader =
    "iter,misalignment_db,mu_mean,sigma_c2_mean,emse_running";
inline constexpr int kCsvSignificantDigits = 9;

inline void append_number(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general,
                                   kCsvSignificantDigits);
    out.append(buf, res.ptr);
}

/// Trailing mean of c^2 over the last `window` iterations.
inline std::vector<double> running_emse(const RunTrace& tr, std::size_t window = 100) {
    if (window == 0) window = 1;
    std::vector<double> out(tr.size());
    double sum = 0.0;
    for (std::size_t n = 0; n < tr.size(); ++n) {
        sum += tr.c_sq[n];
        if (n >= window) sum -= tr.c_sq[n - window];
        out[n] = sum / static_cast<double>(std::min(n + 1, window));
    }
    return out;
}

inline void write_trace_csv(std::ostream& os, const RunTrace& tr,
                            std::size_t running_window = 100) {
    const auto emse = running_emse(tr, running_window);
    std::string line;
    os << kTraceCsvHeader << '\n';
    for (std::size_t n = 0; n < tr.size(); ++n) {
        line.clear();
        line += std::to_string(n);
        line += ',';
        append_number(line, tr.misalignment_db[n]);
        line += ',';
        append_number(line, tr.mu[n]);
        line += ',';
        append_number(line, tr.sigma_c2[n]);
        line += ',';
        append_number(line, emse[n]);
        line += '\n';
        os << line;
    }
}

} // namespace vssnlms
