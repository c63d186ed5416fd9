#include "fusskit/audio.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fft.hpp"

namespace fuss {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::file_not_found: return "file_not_found";
        case Errc::malformed_header: return "malformed_header";
        case Errc::unsupported_encoding: return "unsupported_encoding";
        case Errc::io_error: return "io_error";
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::length_mismatch: return "length_mismatch";
        case Errc::sample_rate_mismatch: return "sample_rate_mismatch";
        case Errc::empty_input: return "empty_input";
        case Errc::non_finite: return "non_finite";
        case Errc::constraint_unsatisfiable: return "constraint_unsatisfiable";
        case Errc::sampling_failure: return "sampling_failure";
        case Errc::missing_metadata: return "missing_metadata";
        case Errc::missing_manifest: return "missing_manifest";
        case Errc::missing_resource: return "missing_resource";
        case Errc::degenerate_example: return "degenerate_example";
    }
    return "unknown";
}

AudioBuffer::AudioBuffer(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (sample_rate_ <= 0) {
        throw Error(Errc::invalid_argument,
                    "sample rate must be positive, got " + std::to_string(sample_rate_));
    }
    for (double v : samples_) {
        if (!std::isfinite(v)) throw Error(Errc::non_finite, "audio buffer contains NaN/Inf");
    }
}

AudioBuffer AudioBuffer::zeros(std::size_t n, int sample_rate) {
    return AudioBuffer(std::vector<double>(n, 0.0), sample_rate);
}

bool AudioBuffer::is_silent() const noexcept {
    return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v == 0.0; });
}

AudioBuffer scaled(const AudioBuffer& buffer, double gain) {
    std::vector<double> out(buffer.data());
    for (double& v : out) v *= gain;
    return AudioBuffer(std::move(out), buffer.sample_rate());
}

AudioBuffer added(const AudioBuffer& a, const AudioBuffer& b) {
    if (a.sample_rate() != b.sample_rate()) {
        throw Error(Errc::sample_rate_mismatch, "cannot add buffers with different sample rates");
    }
    if (a.size() != b.size()) throw Error(Errc::length_mismatch, "cannot add buffers of different lengths");
    std::vector<double> out(a.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return AudioBuffer(std::move(out), a.sample_rate());
}

double sum_squares(std::span<const double> x) noexcept {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

double energy_db(std::span<const double> x) noexcept {
    return 10.0 * std::log10(sum_squares(x) + kPowerFloor);
}

namespace {

std::vector<double> convolve_single(std::span<const double> signal, std::span<const double> kernel) {
    const std::size_t out_len = signal.size() + kernel.size() - 1;
    const std::size_t n = detail::next_pow2(out_len);
    detail::RealFft fft(n);
    std::vector<std::complex<double>> a(fft.bins()), b(fft.bins());
    fft.forward(signal, a);
    fft.forward(kernel, b);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
    std::vector<double> out(n);
    fft.inverse(a, out);
    out.resize(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= scale;
    return out;
}

std::vector<double> convolve_overlap_save(std::span<const double> signal,
                                          std::span<const double> kernel,
                                          std::size_t fft_size) {
    const std::size_t k_len = kernel.size();
    const std::size_t n = std::max(detail::next_pow2(fft_size), detail::next_pow2(2 * k_len));
    const std::size_t step = n - k_len + 1;
    const std::size_t out_len = signal.size() + k_len - 1;

    detail::RealFft fft(n);
    std::vector<std::complex<double>> h(fft.bins()), block_spec(fft.bins());
    fft.forward(kernel, h);

    std::vector<double> block(n), result(n), out(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t start = 0; start < out_len; start += step) {
        // Block covers input samples [start - (K-1), start - (K-1) + n).
        const auto origin = static_cast<std::ptrdiff_t>(start) - static_cast<std::ptrdiff_t>(k_len - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const std::ptrdiff_t idx = origin + static_cast<std::ptrdiff_t>(i);
            block[i] = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(signal.size())) ? signal[idx] : 0.0;
        }
        fft.forward(block, block_spec);
        for (std::size_t k = 0; k < block_spec.size(); ++k) block_spec[k] *= h[k];
        fft.inverse(block_spec, result);
        const std::size_t count = std::min(step, out_len - start);
        for (std::size_t i = 0; i < count; ++i) out[start + i] = result[k_len - 1 + i] * scale;
    }
    return out;
}

}  // namespace

std::vector<double> convolve(std::span<const double> signal, std::span<const double> kernel,
                             const ConvolveOptions& options) {
    if (signal.empty() || kernel.empty()) throw Error(Errc::empty_input, "convolution of an empty signal");
    if (signal.size() < kernel.size()) return convolve(kernel, signal, options);
    if (signal.size() > options.block_threshold) {
        return convolve_overlap_save(signal, kernel, options.block_fft_size);
    }
    return convolve_single(signal, kernel);
}

AudioBuffer fft_convolve(const AudioBuffer& signal, const AudioBuffer& kernel,
                         const ConvolveOptions& options) {
    if (signal.sample_rate() != kernel.sample_rate()) {
        throw Error(Errc::sample_rate_mismatch,
                    "fft_convolve: sample rates " + std::to_string(signal.sample_rate()) + " and " +
                        std::to_string(kernel.sample_rate()) + " differ");
    }
    return AudioBuffer(convolve(signal.samples(), kernel.samples(), options), signal.sample_rate());
}

}  // namespace fuss
