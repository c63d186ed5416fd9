#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fusskit/error.hpp"

namespace fuss {

inline constexpr int kDefaultSampleRate = 16000;

// Mono waveform plus its sample rate. Immutable once built; every operation
// returns a new buffer, so instances can be shared freely across threads.
class AudioBuffer {
public:
    AudioBuffer() = default;
    AudioBuffer(std::vector<double> samples, int sample_rate);

    static AudioBuffer zeros(std::size_t n, int sample_rate);

    std::span<const double> samples() const noexcept { return samples_; }
    const std::vector<double>& data() const noexcept { return samples_; }
    int sample_rate() const noexcept { return sample_rate_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    double operator[](std::size_t i) const { return samples_[i]; }
    double duration() const noexcept {
        return static_cast<double>(samples_.size()) / sample_rate_;
    }

    bool is_silent() const noexcept;

private:
    std::vector<double> samples_;
    int sample_rate_ = kDefaultSampleRate;
};

AudioBuffer scaled(const AudioBuffer& buffer, double gain);
AudioBuffer added(const AudioBuffer& a, const AudioBuffer& b);

// ---------------------------------------------------------------------------
// WAV I/O

enum class WavEncoding { pcm16, float32 };

struct WavInfo {
    int sample_rate = 0;
    int channels = 0;
    std::size_t frames = 0;
    WavEncoding encoding = WavEncoding::pcm16;

    double duration() const { return static_cast<double>(frames) / sample_rate; }
};

// Parses only the header chunks; used to read clip durations cheaply.
WavInfo read_wav_info(const std::filesystem::path& path);

// Multichannel files are reduced by picking `channel`, never by downmixing.
AudioBuffer read_wav(const std::filesystem::path& path, int channel = 0);

// pcm16 clips to [-1, 1 - 2^-15] and quantizes with round-to-nearest.
// float32 narrows each sample to single precision.
void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path,
               WavEncoding encoding = WavEncoding::float32);

// ---------------------------------------------------------------------------
// Convolution and energy

struct ConvolveOptions {
    // Signals longer than this are processed block-wise (overlap-save).
    std::size_t block_threshold = std::size_t{1} << 22;
    // FFT size used in block mode; raised automatically to fit the kernel.
    std::size_t block_fft_size = std::size_t{1} << 16;
};

// Full linear convolution, output length N + K - 1.
AudioBuffer fft_convolve(const AudioBuffer& signal, const AudioBuffer& kernel,
                         const ConvolveOptions& options = {});

// Same as fft_convolve on raw sample spans; no rate bookkeeping.
std::vector<double> convolve(std::span<const double> signal, std::span<const double> kernel,
                             const ConvolveOptions& options = {});

inline constexpr double kPowerFloor = 1e-30;

double sum_squares(std::span<const double> x) noexcept;

// 10*log10(total energy + 1e-30). Silence maps to -300 dB.
double energy_db(std::span<const double> x) noexcept;
inline double energy_db(const AudioBuffer& buffer) noexcept {
    return energy_db(buffer.samples());
}

// ---------------------------------------------------------------------------
// STFT

enum class StftWindow { sqrt_hann };

struct StftConfig {
    double window_length = 0.032;  // seconds
    double hop = 0.008;            // seconds
    StftWindow window = StftWindow::sqrt_hann;

    std::size_t window_samples(int sample_rate) const;
    std::size_t hop_samples(int sample_rate) const;
    std::size_t fft_size(int sample_rate) const;

    // Throws invalid_argument unless the window/hop pair reconstructs
    // perfectly under weighted overlap-add.
    void validate(int sample_rate) const;
};

struct Spectrogram {
    std::size_t num_frames = 0;
    std::size_t num_bins = 0;
    std::vector<std::complex<double>> frames;  // row-major: frame * num_bins + bin
    StftConfig config;
    int sample_rate = kDefaultSampleRate;
    std::size_t original_length = 0;

    std::complex<double>& at(std::size_t frame, std::size_t bin) {
        return frames[frame * num_bins + bin];
    }
    const std::complex<double>& at(std::size_t frame, std::size_t bin) const {
        return frames[frame * num_bins + bin];
    }
};

Spectrogram stft(const AudioBuffer& buffer, const StftConfig& config = {});
AudioBuffer istft(const Spectrogram& spec);

}  // namespace fuss
