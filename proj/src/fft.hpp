#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace fuss::detail {

// Real-input FFT of a fixed size backed by FFTW. Plans are created once per
// size under a global lock and reused; execution uses per-instance aligned
// buffers, so separate instances may run concurrently.
class RealFft {
public:
    explicit RealFft(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    std::size_t bins() const noexcept { return n_ / 2 + 1; }

    // `in` may be shorter than size(); the remainder is zero-padded.
    void forward(std::span<const double> in, std::span<std::complex<double>> out);
    // Unnormalized inverse: forward followed by inverse scales by size().
    void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
    struct FreeDeleter {
        void operator()(void* p) const noexcept;
    };

    std::size_t n_;
    void* forward_plan_;
    void* inverse_plan_;
    std::unique_ptr<double, FreeDeleter> real_;
    std::unique_ptr<std::complex<double>, FreeDeleter> complex_;
};

std::size_t next_pow2(std::size_t n) noexcept;

}  // namespace fuss::detail
