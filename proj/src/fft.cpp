#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

namespace fuss::detail {
namespace {

struct PlanPair {
    fftw_plan forward;
    fftw_plan inverse;
};

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Plans live for the whole process; FFTW's planner is not thread-safe.
PlanPair plans_for(std::size_t n) {
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    double* r = fftw_alloc_real(n);
    fftw_complex* c = fftw_alloc_complex(n / 2 + 1);
    const int size = static_cast<int>(n);
    PlanPair pair{fftw_plan_dft_r2c_1d(size, r, c, FFTW_ESTIMATE),
                  fftw_plan_dft_c2r_1d(size, c, r, FFTW_ESTIMATE)};
    fftw_free(r);
    fftw_free(c);
    cache.emplace(n, pair);
    return pair;
}

}  // namespace

void RealFft::FreeDeleter::operator()(void* p) const noexcept { fftw_free(p); }

RealFft::RealFft(std::size_t n)
    : n_(n),
      real_(fftw_alloc_real(n)),
      complex_(reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n / 2 + 1))) {
    const PlanPair pair = plans_for(n);
    forward_plan_ = pair.forward;
    inverse_plan_ = pair.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
    const std::size_t m = std::min(in.size(), n_);
    std::copy_n(in.begin(), m, real_.get());
    std::fill(real_.get() + m, real_.get() + n_, 0.0);
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), real_.get(),
                         reinterpret_cast<fftw_complex*>(complex_.get()));
    std::copy_n(complex_.get(), bins(), out.begin());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    std::copy_n(in.begin(), bins(), complex_.get());
    // c2r overwrites its input, which is why the copy above is needed.
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                         reinterpret_cast<fftw_complex*>(complex_.get()), real_.get());
    std::copy_n(real_.get(), std::min(out.size(), n_), out.begin());
}

std::size_t next_pow2(std::size_t n) noexcept {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace fuss::detail
