#pragma once

// Mono 16-bit PCM RIFF/WAVE reader and writer.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace vssnlms {

struct WavData {
    std::vector<double> samples;  // scaled by 2^-15, in [-1, 1)
    std::uint32_t sample_rate = 0;
};

inline constexpr std::uint32_t kCanonicalSampleRate = 8000;

namespace detail {

inline std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) |
           (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

inline bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char (&tag)[5]) {
    return std::equal(tag, tag + 4, b.begin() + static_cast<std::ptrdiff_t>(at),
                      [](char c, std::uint8_t u) { return static_cast<std::uint8_t>(c) == u; });
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) {
    out.insert(out.end(), tag, tag + 4);
}

} // namespace detail

/// Decode an in-memory WAV image. Throws IngestionError naming the first
/// header field that is missing, malformed or unsupported.
inline WavData parse_wav(std::span<const std::uint8_t> bytes) {
    using detail::read_u16;
    using detail::read_u32;
    using detail::tag_is;

    if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF"))
        throw IngestionError("riff_id", "not a RIFF file (riff_id)");
    if (!tag_is(bytes, 8, "WAVE"))
        throw IngestionError("wave_id", "RIFF form type is not WAVE (wave_id)");

    bool have_fmt = false;
    std::uint16_t channels = 0;
    std::uint16_t bits = 0;
    std::uint32_t rate = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;

        if (tag_is(bytes, pos, "fmt ")) {
            if (chunk_size < 16 || body + 16 > bytes.size())
                throw IngestionError("fmt", "fmt chunk too short (" + std::to_string(chunk_size) +
                                                " bytes)");
            std::uint16_t format = read_u16(bytes, body);
            channels = read_u16(bytes, body + 2);
            rate = read_u32(bytes, body + 4);
            const std::uint16_t block_align = read_u16(bytes, body + 12);
            bits = read_u16(bytes, body + 14);

            // WAVE_FORMAT_EXTENSIBLE carries the real format in the sub-format GUID.
            if (format == 0xFFFE && chunk_size >= 40 && body + 26 <= bytes.size())
                format = read_u16(bytes, body + 24);
            if (format != 1)
                throw IngestionError("audio_format", "audio_format=" + std::to_string(format) +
                                                         " unsupported (PCM only)");
            if (channels != 1)
                throw IngestionError("channels",
                                     "channels=" + std::to_string(channels) + " unsupported");
            if (bits != 16)
                throw IngestionError("bits_per_sample",
                                     "bits_per_sample=" + std::to_string(bits) + " unsupported");
            if (block_align != 2)
                throw IngestionError("block_align",
                                     "block_align=" + std::to_string(block_align) +
                                         " inconsistent with mono 16-bit");
            if (rate == 0) throw IngestionError("sample_rate", "sample_rate=0 invalid");
            have_fmt = true;
        } else if (tag_is(bytes, pos, "data")) {
            if (!have_fmt) throw IngestionError("fmt", "data chunk precedes fmt chunk");
            const std::size_t available = bytes.size() - body;
            std::size_t n_bytes = chunk_size;
            if (n_bytes > available) {
                warn("wav data chunk declares " + std::to_string(chunk_size) + " bytes, only " +
                     std::to_string(available) + " present; truncating");
                n_bytes = available;
            }
            WavData out;
            out.sample_rate = rate;
            out.samples.resize(n_bytes / 2);
            for (std::size_t i = 0; i < out.samples.size(); ++i) {
                const auto raw = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
                out.samples[i] = static_cast<double>(raw) / 32768.0;
            }
            if (rate != kCanonicalSampleRate)
                warn("wav sample_rate=" + std::to_string(rate) + " (8000 expected)");
            return out;
        }
        pos = body + chunk_size + (chunk_size & 1u);
    }
    if (!have_fmt) throw IngestionError("fmt", "fmt chunk missing");
    throw IngestionError("data", "data chunk missing");
}

inline WavData load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("path", "cannot open wav file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_wav(bytes);
}

/// Encode samples as mono 16-bit PCM. Values are clipped to the int16 range.
inline std::vector<std::uint8_t> encode_wav16(std::span<const double> samples,
                                              std::uint32_t sample_rate) {
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    detail::put_tag(out, "RIFF");
    detail::put_u32(out, 36 + data_bytes);
    detail::put_tag(out, "WAVE");
    detail::put_tag(out, "fmt ");
    detail::put_u32(out, 16);
    detail::put_u16(out, 1);
    detail::put_u16(out, 1);
    detail::put_u32(out, sample_rate);
    detail::put_u32(out, sample_rate * 2);
    detail::put_u16(out, 2);
    detail::put_u16(out, 16);
    detail::put_tag(out, "data");
    detail::put_u32(out, data_bytes);
    for (double s : samples) {
        const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    }
    return out;
}

inline void save_wav16(const std::filesystem::path& path, std::span<const double> samples,
                       std::uint32_t sample_rate = kCanonicalSampleRate) {
    const auto bytes = encode_wav16(samples, sample_rate);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write wav file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace vssnlms
