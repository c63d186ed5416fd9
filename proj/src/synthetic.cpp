#include "fusskit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "fusskit/audio.hpp"
#include "fusskit/error.hpp"
#include "fusskit/rng.hpp"

namespace fuss {
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* const kLabels[] = {"bell", "engine", "water", "bird",  "drum", "wind",
                               "hum",  "chime",  "rain",  "siren", "keys", "insect"};

std::string class_label(int c) {
    if (c < static_cast<int>(std::size(kLabels))) return kLabels[c];
    char buf[16];
    std::snprintf(buf, sizeof buf, "class%02d", c);
    return buf;
}

double class_frequency(int c, int num_classes) {
    if (num_classes == 1) return 440.0;
    return 150.0 * std::pow(5000.0 / 150.0, static_cast<double>(c) / (num_classes - 1));
}

std::vector<double> synthesize(int c, int num_classes, std::size_t n, int sr, Rng& rng, bool foreground) {
    const double f = class_frequency(c, num_classes) * rng.uniform(0.97, 1.03);
    std::vector<double> x(n, 0.0);
    switch (c % 4) {
        case 0: {
            std::array<double, 5> phase{};
            for (double& p : phase) p = rng.uniform(0.0, kTwoPi);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / sr;
                for (int h = 1; h <= 5; ++h) {
                    if (h * f < 0.45 * sr) x[i] += std::sin(kTwoPi * h * f * t + phase[h - 1]) / h;
                }
            }
            break;
        }
        case 1: {
            // Two-pole resonator driven by white noise.
            const double r = std::exp(-std::numbers::pi * (f / 4.0) / sr);
            const double a1 = 2.0 * r * std::cos(kTwoPi * f / sr);
            const double a2 = -r * r;
            double y1 = 0.0, y2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double y = rng.uniform(-1.0, 1.0) + a1 * y1 + a2 * y2;
                x[i] = y;
                y2 = y1;
                y1 = y;
            }
            break;
        }
        case 2: {
            const double rate = rng.uniform(2.0, 6.0);
            const double phase = rng.uniform(0.0, kTwoPi);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / sr;
                x[i] = std::sin(kTwoPi * f * t) * (0.6 + 0.4 * std::sin(kTwoPi * rate * t + phase));
            }
            break;
        }
        default: {
            const double rate = rng.uniform(4.0, 9.0);
            const double decay = 1.0 / (0.02 * sr);
            const auto period = static_cast<std::size_t>(sr / rate);
            for (std::size_t i = 0; i < n; ++i) {
                const double age = static_cast<double>(i % period);
                x[i] = std::exp(-age * decay) * std::sin(kTwoPi * f * age / sr);
            }
            break;
        }
    }

    const auto ramp = std::min<std::size_t>(n / 2, static_cast<std::size_t>(0.02 * sr));
    if (foreground) {
        for (std::size_t i = 0; i < ramp; ++i) {
            const double g = static_cast<double>(i) / static_cast<double>(ramp);
            x[i] *= g;
            x[n - 1 - i] *= g;
        }
    }
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    const double target = std::pow(10.0, rng.uniform(-12.0, -3.0) / 20.0);
    if (peak > 0.0) {
        for (double& v : x) v *= target / peak;
    }
    return x;
}

}  // namespace

SynthCorpusSummary write_synthetic_corpus(const fs::path& dir, const SynthCorpusOptions& o) {
    if (o.num_classes < 1 || o.num_uploaders < 1 || o.backgrounds_per_class < 0 || o.foregrounds_per_class < 0 ||
        o.sample_rate <= 0) {
        throw Error(Errc::invalid_argument, "synthetic corpus options out of range");
    }
    fs::create_directories(dir / "audio");

    std::vector<double> zipf(static_cast<std::size_t>(o.num_uploaders));
    for (std::size_t u = 0; u < zipf.size(); ++u) zipf[u] = 1.0 / static_cast<double>(u + 1);
    const double zipf_total = [&] {
        double s = 0.0;
        for (double w : zipf) s += w;
        return s;
    }();

    std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
    if (!manifest) throw Error(Errc::io_error, "cannot write " + (dir / "manifest.csv").string());
    manifest << "id,path,class_label,uploader,duration_s,license\n";

    SynthCorpusSummary summary;
    auto emit = [&](const std::string& id, int c, bool foreground, int k, const std::string& label,
                    const std::string& license) {
        Rng rng(derive_seed(o.seed, {static_cast<std::uint64_t>(c), foreground ? 1u : 0u, static_cast<std::uint64_t>(k)}));
        const double duration = foreground ? rng.uniform(o.foreground_duration_lo, o.foreground_duration_hi)
                                           : rng.uniform(o.background_duration_lo, o.background_duration_hi);
        const auto n = static_cast<std::size_t>(std::llround(duration * o.sample_rate));
        double pick = rng.uniform(0.0, zipf_total);
        std::size_t uploader = 0;
        while (uploader + 1 < zipf.size() && pick >= zipf[uploader]) pick -= zipf[uploader++];

        AudioBuffer audio(synthesize(c, o.num_classes, n, o.sample_rate, rng, foreground), o.sample_rate);
        const std::string rel = "audio/" + id + ".wav";
        write_wav(audio, dir / rel, WavEncoding::pcm16);

        char uploader_name[24];
        std::snprintf(uploader_name, sizeof uploader_name, "user%02zu", uploader);
        char dur[32];
        std::snprintf(dur, sizeof dur, "%.6f", audio.duration());
        manifest << id << ',' << rel << ",\"" << label << "\"," << uploader_name << ',' << dur << ',' << license
                 << '\n';
        ++summary.num_clips;
        summary.total_seconds += audio.duration();
    };

    for (int c = 0; c < o.num_classes; ++c) {
        char id[48];
        for (int k = 0; k < o.backgrounds_per_class; ++k) {
            std::snprintf(id, sizeof id, "c%02d_bg%02d", c, k);
            emit(id, c, false, k, class_label(c), "CC0");
        }
        for (int k = 0; k < o.foregrounds_per_class; ++k) {
            std::snprintf(id, sizeof id, "c%02d_fg%02d", c, k);
            emit(id, c, true, k, class_label(c), "CC0");
        }
    }
    if (o.include_filtered_rows) {
        emit("multi_label", 0, true, 1000, class_label(0) + ";" + class_label(1 % o.num_classes), "CC0");
        emit("non_cc0", 0, true, 1001, class_label(0), "CC-BY-NC-4.0");
    }
    if (!manifest) throw Error(Errc::io_error, "failed writing manifest in " + dir.string());
    return summary;
}

}  // namespace fuss
