#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "fusskit/audio.hpp"

namespace fuss {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
void put16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xFF));
    s.push_back(static_cast<char>(v >> 8));
}
void put32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct ParsedHeader {
    WavInfo info;
    std::size_t data_offset = 0;
    int bits = 0;
    int block_align = 0;
};

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& why) {
    throw Error(Errc::malformed_header, "malformed WAV header in " + path.string() + ": " + why);
}

std::string slurp(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(Errc::file_not_found, "no such file: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// `bytes` holds at least the header chunks; `total_size` is the full file size.
ParsedHeader parse_header(const std::string& bytes, std::size_t total_size,
                          const std::filesystem::path& path) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();
    if (n < 12) malformed(path, "file shorter than RIFF preamble");
    if (std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
        malformed(path, "missing RIFF/WAVE tags");
    }

    ParsedHeader h;
    bool have_fmt = false;
    std::uint16_t format = 0;
    std::size_t pos = 12;
    while (pos + 8 <= n) {
        const std::uint32_t size = le32(p + pos + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(p + pos, "fmt ", 4) == 0) {
            if (size < 16 || body + size > n) malformed(path, "truncated fmt chunk");
            format = le16(p + body);
            h.info.channels = le16(p + body + 2);
            h.info.sample_rate = static_cast<int>(le32(p + body + 4));
            h.block_align = le16(p + body + 12);
            h.bits = le16(p + body + 14);
            if (format == kFormatExtensible) {
                if (size < 40) malformed(path, "truncated extensible fmt chunk");
                format = le16(p + body + 24);  // first two bytes of the subformat GUID
            }
            have_fmt = true;
        } else if (std::memcmp(p + pos, "data", 4) == 0) {
            if (!have_fmt) malformed(path, "data chunk before fmt chunk");
            if (body + size > total_size) malformed(path, "data chunk runs past end of file");
            h.data_offset = body;
            if (h.info.channels <= 0 || h.block_align <= 0 || h.info.sample_rate <= 0) {
                malformed(path, "invalid channel count, block alignment or sample rate");
            }
            if (format == kFormatPcm && h.bits == 16) {
                h.info.encoding = WavEncoding::pcm16;
            } else if (format == kFormatFloat && h.bits == 32) {
                h.info.encoding = WavEncoding::float32;
            } else {
                throw Error(Errc::unsupported_encoding,
                            "unsupported WAV encoding in " + path.string() + " (format " +
                                std::to_string(format) + ", " + std::to_string(h.bits) + " bits)");
            }
            if (h.block_align != h.info.channels * h.bits / 8) malformed(path, "inconsistent block alignment");
            h.info.frames = size / static_cast<std::size_t>(h.block_align);
            return h;
        }
        pos = body + size + (size & 1u);
    }
    malformed(path, have_fmt ? "no data chunk" : "no fmt chunk");
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(Errc::file_not_found, "no such file: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    // Header chunks are tiny; the data chunk is the only large one and we stop there.
    std::string head(4096, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(in.gcount()));
    return parse_header(head, static_cast<std::size_t>(std::filesystem::file_size(path)), path).info;
}

AudioBuffer read_wav(const std::filesystem::path& path, int channel) {
    const std::string bytes = slurp(path);
    const ParsedHeader h = parse_header(bytes, bytes.size(), path);
    if (channel < 0 || channel >= h.info.channels) {
        throw Error(Errc::invalid_argument, "channel " + std::to_string(channel) + " out of range for " +
                                                path.string());
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + h.data_offset;
    std::vector<double> samples(h.info.frames);
    const std::size_t stride = static_cast<std::size_t>(h.block_align);
    if (h.info.encoding == WavEncoding::pcm16) {
        const std::size_t off = static_cast<std::size_t>(channel) * 2;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto v = static_cast<std::int16_t>(le16(p + i * stride + off));
            samples[i] = static_cast<double>(v) / 32768.0;
        }
    } else {
        const std::size_t off = static_cast<std::size_t>(channel) * 4;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const float f = std::bit_cast<float>(le32(p + i * stride + off));
            if (!std::isfinite(f)) throw Error(Errc::non_finite, "non-finite sample in " + path.string());
            samples[i] = static_cast<double>(f);
        }
    }
    return AudioBuffer(std::move(samples), h.info.sample_rate);
}

void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path, WavEncoding encoding) {
    const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
    const std::uint16_t block_align = bits / 8;
    const auto data_bytes = static_cast<std::uint32_t>(buffer.size() * block_align);

    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    put32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    put32(out, 16);
    put16(out, encoding == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(buffer.sample_rate()));
    put32(out, static_cast<std::uint32_t>(buffer.sample_rate()) * block_align);
    put16(out, block_align);
    put16(out, bits);
    out += "data";
    put32(out, data_bytes);

    if (encoding == WavEncoding::pcm16) {
        for (double v : buffer.samples()) {
            const double q = std::nearbyint(std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0);
            put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
        }
    } else {
        for (double v : buffer.samples()) put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(Errc::io_error, "cannot write " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error(Errc::io_error, "short write to " + path.string());
}

}  // namespace fuss
