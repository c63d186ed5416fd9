#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fusskit/audio.hpp"
#include "fusskit/rng.hpp"

namespace fuss::testing {

inline std::vector<double> gaussian(Rng& rng, std::size_t n, double scale = 1.0) {
    // Box-Muller keeps the draws independent of the standard library.
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; i += 2) {
        const double u1 = 1.0 - rng.uniform();
        const double u2 = rng.uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        x[i] = scale * r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < n) x[i + 1] = scale * r * std::sin(2.0 * M_PI * u2);
    }
    return x;
}

inline AudioBuffer noise(Rng& rng, std::size_t n, double scale = 1.0, int sr = kDefaultSampleRate) {
    return AudioBuffer(gaussian(rng, n, scale), sr);
}

inline std::vector<double> unit_energy(std::vector<double> x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    const double g = 1.0 / std::sqrt(e);
    for (double& v : x) v *= g;
    return x;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("fusskit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace fuss::testing
