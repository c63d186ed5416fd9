#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "fusskit/audio.hpp"

namespace fuss {
namespace {

// Periodic sqrt-Hann; its square (the Hann window) overlap-adds to a
// constant whenever the hop divides the window length.
std::vector<double> sqrt_hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                 static_cast<double>(n));
        w[i] = std::sqrt(hann);
    }
    return w;
}

struct Framing {
    std::size_t window;
    std::size_t hop;
    std::size_t fft;
    std::size_t front_pad;

    std::size_t frames_for(std::size_t n) const { return (front_pad + n + hop - 1) / hop; }
};

Framing framing(const StftConfig& config, int sample_rate) {
    config.validate(sample_rate);
    const std::size_t win = config.window_samples(sample_rate);
    const std::size_t hop = config.hop_samples(sample_rate);
    return {win, hop, config.fft_size(sample_rate), win - hop};
}

}  // namespace

std::size_t StftConfig::window_samples(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(window_length * sample_rate));
}

std::size_t StftConfig::hop_samples(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(hop * sample_rate));
}

std::size_t StftConfig::fft_size(int sample_rate) const {
    return detail::next_pow2(window_samples(sample_rate));
}

void StftConfig::validate(int sample_rate) const {
    if (!(window_length > 0.0) || !(hop > 0.0) || hop > window_length) {
        throw Error(Errc::invalid_argument, "STFT requires 0 < hop <= window_length");
    }
    const std::size_t win = window_samples(sample_rate);
    const std::size_t h = hop_samples(sample_rate);
    if (h == 0 || win < 2 * h || win % h != 0) {
        throw Error(Errc::invalid_argument,
                    "STFT window " + std::to_string(win) + " / hop " + std::to_string(h) +
                        " samples does not satisfy the overlap-add condition (hop must divide the "
                        "window with at least 2x overlap)");
    }
}

Spectrogram stft(const AudioBuffer& buffer, const StftConfig& config) {
    const Framing f = framing(config, buffer.sample_rate());
    const std::vector<double> window = sqrt_hann(f.window);

    Spectrogram spec;
    spec.config = config;
    spec.sample_rate = buffer.sample_rate();
    spec.original_length = buffer.size();
    spec.num_bins = f.fft / 2 + 1;
    spec.num_frames = f.frames_for(buffer.size());
    spec.frames.resize(spec.num_frames * spec.num_bins);

    detail::RealFft fft(f.fft);
    std::vector<double> frame(f.window);
    const auto x = buffer.samples();
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
        const auto origin = static_cast<std::ptrdiff_t>(t * f.hop) - static_cast<std::ptrdiff_t>(f.front_pad);
        for (std::size_t i = 0; i < f.window; ++i) {
            const std::ptrdiff_t idx = origin + static_cast<std::ptrdiff_t>(i);
            frame[i] = (idx >= 0 && idx < n) ? x[static_cast<std::size_t>(idx)] * window[i] : 0.0;
        }
        fft.forward(frame, std::span(spec.frames).subspan(t * spec.num_bins, spec.num_bins));
    }
    return spec;
}

AudioBuffer istft(const Spectrogram& spec) {
    const Framing f = framing(spec.config, spec.sample_rate);
    if (spec.num_bins != f.fft / 2 + 1 || spec.frames.size() != spec.num_frames * spec.num_bins) {
        throw Error(Errc::invalid_argument, "spectrogram shape does not match its STFT config");
    }
    const std::vector<double> window = sqrt_hann(f.window);

    const std::size_t n = spec.original_length;
    std::vector<double> out(n, 0.0), norm(n, 0.0), frame(f.fft);
    detail::RealFft fft(f.fft);
    const double scale = 1.0 / static_cast<double>(f.fft);
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
        fft.inverse(std::span(spec.frames).subspan(t * spec.num_bins, spec.num_bins), frame);
        const auto origin = static_cast<std::ptrdiff_t>(t * f.hop) - static_cast<std::ptrdiff_t>(f.front_pad);
        for (std::size_t i = 0; i < f.window; ++i) {
            const std::ptrdiff_t idx = origin + static_cast<std::ptrdiff_t>(i);
            if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n)) continue;
            out[static_cast<std::size_t>(idx)] += frame[i] * scale * window[i];
            norm[static_cast<std::size_t>(idx)] += window[i] * window[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (norm[i] > 1e-12) out[i] /= norm[i];
    }
    return AudioBuffer(std::move(out), spec.sample_rate);
}

}  // namespace fuss
