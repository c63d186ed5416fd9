#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "fusskit/rng.hpp"
#include "fusskit/room.hpp"

namespace fuss {
namespace {

constexpr int kFirTaps = 2 * kBandFilterHalfWidth + 1;
using FirBank = std::array<BandValues, kFirTaps>;  // taps[k][band]

// Least-squares fit of a type-I linear-phase FIR to a magnitude response
// interpolated (log-frequency, piecewise linear) between octave-band values.
// The fit is linear in the band values, so it reduces to one fixed matrix
// per sample rate: taps = bank * band_gains.
FirBank design_band_filters(int sample_rate) {
    constexpr int kGrid = 512;
    constexpr int kCoeffs = kBandFilterHalfWidth + 1;
    Eigen::MatrixXd basis(kGrid, kCoeffs);
    Eigen::MatrixXd interp = Eigen::MatrixXd::Zero(kGrid, kNumBands);
    const double nyquist = 0.5 * sample_rate;
    for (int j = 0; j < kGrid; ++j) {
        const double frac = static_cast<double>(j) / (kGrid - 1);
        const double omega = std::numbers::pi * frac;
        basis(j, 0) = 1.0;
        for (int k = 1; k < kCoeffs; ++k) basis(j, k) = 2.0 * std::cos(k * omega);

        const double f = nyquist * frac;
        if (f <= kBandCenters.front()) {
            interp(j, 0) = 1.0;
        } else if (f >= kBandCenters.back()) {
            interp(j, kNumBands - 1) = 1.0;
        } else {
            const double u = std::log2(f / kBandCenters.front());
            const int i = std::min(static_cast<int>(u), static_cast<int>(kNumBands) - 2);
            const double t = u - i;
            interp(j, i) = 1.0 - t;
            interp(j, i + 1) = t;
        }
    }
    const Eigen::MatrixXd coeffs = basis.colPivHouseholderQr().solve(interp);

    FirBank bank{};
    for (std::size_t b = 0; b < kNumBands; ++b) {
        bank[kBandFilterHalfWidth][b] = coeffs(0, static_cast<Eigen::Index>(b));
        for (int k = 1; k < kCoeffs; ++k) {
            const double c = coeffs(k, static_cast<Eigen::Index>(b));
            bank[kBandFilterHalfWidth + k][b] = c;
            bank[kBandFilterHalfWidth - k][b] = c;
        }
    }
    return bank;
}

const FirBank& band_filters(int sample_rate) {
    static std::mutex mutex;
    static std::map<int, FirBank> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(sample_rate);
    if (it == cache.end()) it = cache.emplace(sample_rate, design_band_filters(sample_rate)).first;
    return it->second;
}

// Hann-windowed sinc sampled on a fine grid for fractional-delay taps.
class FractionalDelayTable {
public:
    static constexpr int kOversample = 1024;

    explicit FractionalDelayTable(int half_width) : half_width_(half_width) {
        const int n = 2 * half_width * kOversample + 2;
        table_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / kOversample - half_width;
            const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
            const double window = std::abs(t) >= half_width
                                      ? 0.0
                                      : 0.5 + 0.5 * std::cos(std::numbers::pi * t / half_width);
            table_[static_cast<std::size_t>(i)] = sinc * window;
        }
    }

    // Taps for samples floor(delay) - hw + 1 .. floor(delay) + hw, normalized
    // to unit sum so the arrival amplitude is independent of the fraction.
    void taps(double frac, std::span<double> out) const {
        double sum = 0.0;
        for (int k = 0; k < 2 * half_width_; ++k) {
            const double pos = (k + 1 - frac) * kOversample;
            const auto i = static_cast<std::size_t>(pos);
            const double w = pos - static_cast<double>(i);
            const double v = table_[i] + w * (table_[i + 1] - table_[i]);
            out[static_cast<std::size_t>(k)] = v;
            sum += v;
        }
        for (double& v : out) v /= sum;
    }

private:
    int half_width_;
    std::vector<double> table_;
};

struct AxisImage {
    int n;
    int q;
    int hits;
    double coord;
    BandValues gain;
};

std::vector<AxisImage> axis_images(double dim, double source, int extent, const Material& low,
                                   const Material& high, double room_gain) {
    std::vector<AxisImage> out;
    for (int n = -extent; n <= extent; ++n) {
        for (int q = 0; q <= 1; ++q) {
            AxisImage img{n, q, std::abs(n - q) + std::abs(n), 2.0 * n * dim + (1 - 2 * q) * source, {}};
            for (std::size_t b = 0; b < kNumBands; ++b) {
                img.gain[b] = std::pow(low.band_reflectivity[b] * room_gain, std::abs(n - q)) *
                              std::pow(high.band_reflectivity[b] * room_gain, std::abs(n));
            }
            out.push_back(img);
        }
    }
    return out;
}

std::uint64_t as_tag(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }

template <class Visit>
void for_each_image(const RoomSpec& room, int source_index, const SimConfig& sim, double length_s,
                    int max_order, Visit&& visit) {
    const Vec3 src = room.source_positions[static_cast<std::size_t>(source_index)];
    const Vec3 mic = room.mic_position;
    const double fs = sim.sample_rate;
    const double c = sim.speed_of_sound;
    const double length_samples = std::ceil(length_s * fs);
    const double reach = length_s * c + std::sqrt(3.0) * sim.jitter;

    const auto& w = room.wall_materials;
    auto extent = [&](double dim) { return static_cast<int>(std::ceil(reach / (2.0 * dim))) + 1; };
    const auto xs = axis_images(room.width, src.x, extent(room.width), w[0], w[1], room.reflectivity_gain);
    const auto ys = axis_images(room.length, src.y, extent(room.length), w[2], w[3], room.reflectivity_gain);
    const auto zs = axis_images(room.height, src.z, extent(room.height), w[4], w[5], room.reflectivity_gain);

    const double reach2 = reach * reach;
    ImageSource img;
    for (const auto& ix : xs) {
        const double dx = ix.coord - mic.x;
        if (std::abs(dx) > reach || ix.hits > max_order) continue;
        for (const auto& iy : ys) {
            const double dy = iy.coord - mic.y;
            const double dxy2 = dx * dx + dy * dy;
            if (dxy2 > reach2 || ix.hits + iy.hits > max_order) continue;
            for (const auto& iz : zs) {
                const int order = ix.hits + iy.hits + iz.hits;
                if (order > max_order) continue;
                const double dz = iz.coord - mic.z;
                if (dxy2 + dz * dz > reach2) continue;

                img.index = {ix.n, iy.n, iz.n};
                img.mirror = {ix.q, iy.q, iz.q};
                img.order = order;
                img.position = {ix.coord, iy.coord, iz.coord};
                if (order > 0 && sim.jitter > 0.0) {
                    const std::uint64_t h =
                        derive_seed(room.seed, {as_tag(source_index), as_tag(ix.n), as_tag(ix.q), as_tag(iy.n),
                                                as_tag(iy.q), as_tag(iz.n), as_tag(iz.q)});
                    img.position.x += sim.jitter * (2.0 * unit_from_bits(splitmix64(h ^ 1)) - 1.0);
                    img.position.y += sim.jitter * (2.0 * unit_from_bits(splitmix64(h ^ 2)) - 1.0);
                    img.position.z += sim.jitter * (2.0 * unit_from_bits(splitmix64(h ^ 3)) - 1.0);
                }
                img.distance = distance(img.position, mic);
                img.delay_samples = img.distance / c * fs;
                if (img.delay_samples >= length_samples) continue;
                for (std::size_t b = 0; b < kNumBands; ++b) img.gain[b] = ix.gain[b] * iy.gain[b] * iz.gain[b];
                visit(img);
            }
        }
    }
}

void check_source_index(const RoomSpec& room, int source_index) {
    if (source_index < 0 || static_cast<std::size_t>(source_index) >= room.source_positions.size()) {
        throw Error(Errc::invalid_argument, "source index " + std::to_string(source_index) +
                                                " out of range for room '" + room.room_id + "'");
    }
}

}  // namespace

double distance(const Vec3& a, const Vec3& b) noexcept {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool RoomSpec::contains(const Vec3& p) const noexcept {
    return p.x > 0.0 && p.x < width && p.y > 0.0 && p.y < length && p.z > 0.0 && p.z < height;
}

RoomSpec sample_room(std::uint64_t seed, int n_sources, const RoomRanges& ranges) {
    if (n_sources < 1 || n_sources > 4) {
        throw Error(Errc::invalid_argument, "sample_room supports 1..4 sources, got " + std::to_string(n_sources));
    }
    const double margin = ranges.wall_margin;
    if (2.0 * margin >= std::min({ranges.width.lo, ranges.length.lo, ranges.height.lo})) {
        throw Error(Errc::constraint_unsatisfiable, "wall margin leaves no interior in the smallest room");
    }

    Rng rng(seed);
    RoomSpec room;
    room.seed = seed;
    room.width = rng.uniform(ranges.width.lo, ranges.width.hi);
    room.length = rng.uniform(ranges.length.lo, ranges.length.hi);
    room.height = rng.uniform(ranges.height.lo, ranges.height.hi);
    const auto& table = material_table();
    for (auto& m : room.wall_materials) m = table[rng.below(table.size())];
    room.reflectivity_gain = rng.uniform(ranges.reflectivity_gain.lo, ranges.reflectivity_gain.hi);

    auto interior_point = [&] {
        return Vec3{rng.uniform(margin, room.width - margin), rng.uniform(margin, room.length - margin),
                    rng.uniform(margin, room.height - margin)};
    };
    room.mic_position = interior_point();
    for (int i = 0; i < n_sources; ++i) {
        int attempt = 0;
        Vec3 p = interior_point();
        while (distance(p, room.mic_position) < ranges.min_source_mic_distance) {
            if (++attempt >= ranges.max_attempts) {
                throw Error(Errc::constraint_unsatisfiable,
                            "could not place source " + std::to_string(i) + " at least " +
                                std::to_string(ranges.min_source_mic_distance) + " m from the mic after " +
                                std::to_string(ranges.max_attempts) + " attempts");
            }
            p = interior_point();
        }
        room.source_positions.push_back(p);
    }
    return room;
}

double sabine_t60(const RoomSpec& room) {
    const std::array<double, kNumSurfaces> area = {
        room.length * room.height, room.length * room.height, room.width * room.height,
        room.width * room.height,  room.width * room.length,  room.width * room.length};
    double worst = 0.0;
    for (std::size_t b = 0; b < kNumBands; ++b) {
        double absorption = 0.0;
        for (std::size_t s = 0; s < kNumSurfaces; ++s) {
            const double r = room.wall_materials[s].band_reflectivity[b] * room.reflectivity_gain;
            absorption += area[s] * (1.0 - r * r);
        }
        if (absorption <= 0.0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, 0.161 * room.volume() / absorption);
    }
    return worst;
}

double resolved_rir_length(const RoomSpec& room, const SimConfig& sim) {
    if (sim.rir_length > 0.0) return sim.rir_length;
    return std::clamp(1.5 * sabine_t60(room), sim.min_rir_length, sim.max_rir_length);
}

int resolved_max_order(const RoomSpec& room, const SimConfig& sim) {
    if (sim.max_order >= 0) return sim.max_order;
    // Bounds the wall-hit count of any image within reach of the mic.
    const double reach = resolved_rir_length(room, sim) * sim.speed_of_sound;
    return static_cast<int>(std::ceil(reach * (1.0 / room.width + 1.0 / room.length + 1.0 / room.height))) + 3;
}

std::vector<ImageSource> enumerate_images(const RoomSpec& room, int source_index, const SimConfig& sim) {
    check_source_index(room, source_index);
    std::vector<ImageSource> images;
    for_each_image(room, source_index, sim, resolved_rir_length(room, sim), resolved_max_order(room, sim),
                   [&](const ImageSource& img) { images.push_back(img); });
    auto direct = std::find_if(images.begin(), images.end(), [](const ImageSource& i) { return i.order == 0; });
    if (direct != images.end()) std::iter_swap(images.begin(), direct);
    return images;
}

Rir image_method_rir(const RoomSpec& room, int source_index, const SimConfig& sim) {
    check_source_index(room, source_index);
    if (sim.sample_rate <= 0 || sim.speed_of_sound <= 0.0 || sim.sinc_half_width < 1) {
        throw Error(Errc::invalid_argument, "invalid simulation config");
    }
    const double length_s = resolved_rir_length(room, sim);
    const int max_order = resolved_max_order(room, sim);
    const auto length = static_cast<std::size_t>(std::ceil(length_s * sim.sample_rate));
    const double direct_delay = distance(room.source_positions[static_cast<std::size_t>(source_index)],
                                         room.mic_position) / sim.speed_of_sound * sim.sample_rate;
    if (direct_delay >= static_cast<double>(length)) {
        throw Error(Errc::invalid_argument, "RIR length is shorter than the direct-path delay");
    }

    const int hw = sim.sinc_half_width;
    const std::size_t margin = static_cast<std::size_t>(hw + kBandFilterHalfWidth + 1);
    const std::size_t padded = length + 2 * margin;
    std::vector<double> direct(padded, 0.0);
    std::array<std::vector<double>, kNumBands> bands;
    for (auto& b : bands) b.assign(padded, 0.0);

    const FractionalDelayTable table(hw);
    std::vector<double> taps(static_cast<std::size_t>(2 * hw));
    for_each_image(room, source_index, sim, length_s, max_order, [&](const ImageSource& img) {
        const double whole = std::floor(img.delay_samples);
        table.taps(img.delay_samples - whole, taps);
        const auto first = static_cast<std::ptrdiff_t>(whole) - hw + 1 + static_cast<std::ptrdiff_t>(margin);
        if (first < 0) return;
        const auto start = static_cast<std::size_t>(first);
        const double amplitude = 1.0 / (4.0 * std::numbers::pi * img.distance);
        if (img.order == 0) {
            for (std::size_t k = 0; k < taps.size(); ++k) direct[start + k] += amplitude * taps[k];
            return;
        }
        for (std::size_t b = 0; b < kNumBands; ++b) {
            const double g = amplitude * img.gain[b];
            if (g == 0.0) continue;
            double* dst = bands[b].data() + start;
            for (std::size_t k = 0; k < taps.size(); ++k) dst[k] += g * taps[k];
        }
    });

    const FirBank& fir = band_filters(sim.sample_rate);
    std::vector<double> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        double v = direct[i + margin];
        for (int k = 0; k < kFirTaps; ++k) {
            const std::size_t idx = i + margin + kBandFilterHalfWidth - static_cast<std::size_t>(k);
            for (std::size_t b = 0; b < kNumBands; ++b) v += fir[static_cast<std::size_t>(k)][b] * bands[b][idx];
        }
        if (!std::isfinite(v)) throw Error(Errc::non_finite, "non-finite RIR sample");
        out[i] = v;
    }
    return Rir{AudioBuffer(std::move(out), sim.sample_rate), source_index, room.room_id, max_order};
}

T60Estimate measure_t60(const AudioBuffer& rir) {
    const auto h = rir.samples();
    const double total = sum_squares(h);
    if (!(total > 0.0)) throw Error(Errc::invalid_argument, "cannot measure T60 of a silent RIR");

    // Schroeder curve in dB relative to total energy.
    std::vector<double> edc(h.size());
    double tail = 0.0;
    for (std::size_t i = h.size(); i-- > 0;) {
        tail += h[i] * h[i];
        edc[i] = 10.0 * std::log10(tail / total + kPowerFloor);
    }

    const double fs = rir.sample_rate();
    auto first_below = [&](double level) {
        return static_cast<std::size_t>(std::find_if(edc.begin(), edc.end(), [&](double v) { return v <= level; }) -
                                        edc.begin());
    };
    std::size_t begin = first_below(-5.0);
    std::size_t end = first_below(-25.0);
    T60Estimate result;
    if (end < edc.size()) {
        // Least-squares line of crossing time against level, every 0.25 dB
        // of the span. Equal weight per level keeps plateaus of a sparse,
        // stepped decay from dominating the slope.
        double sl = 0, st = 0, sll = 0, slt = 0;
        int n = 0;
        for (int k = 0; k <= 80; ++k) {
            const double level = -5.0 - 0.25 * k;
            const std::size_t i = first_below(level);
            const double t = (static_cast<double>(i - 1) + (edc[i - 1] - level) / (edc[i - 1] - edc[i])) / fs;
            sl += level;
            st += t;
            sll += level * level;
            slt += level * t;
            ++n;
        }
        const double slope = (n * slt - sl * st) / (n * sll - sl * sl);  // seconds per dB, negative
        result.seconds = slope < 0.0 ? -60.0 * slope : std::numeric_limits<double>::infinity();
        return result;
    }

    result.censored = true;
    // Fit whatever decay exists up to the last sample that still holds energy.
    end = edc.size() - 1;
    while (end > 0 && h[end] == 0.0) --end;
    if (begin >= end) begin = 0;
    if (end <= begin) {
        // Whole decay happens within one sample.
        result.seconds = 60.0 / (-edc[end] + 1e-12) / fs;
        return result;
    }
    double st = 0, se = 0, stt = 0, ste = 0;
    const double n = static_cast<double>(end - begin + 1);
    for (std::size_t i = begin; i <= end; ++i) {
        const double t = static_cast<double>(i) / fs;
        st += t;
        se += edc[i];
        stt += t * t;
        ste += t * edc[i];
    }
    const double slope = (n * ste - st * se) / (n * stt - st * st);
    result.seconds = slope < 0.0 ? -60.0 / slope : std::numeric_limits<double>::infinity();
    return result;
}

AudioBuffer render_reverberant(const AudioBuffer& source, const Rir& rir) {
    const AudioBuffer wet = fft_convolve(source, rir.samples);
    std::vector<double> out(wet.data().begin(), wet.data().begin() + static_cast<std::ptrdiff_t>(source.size()));
    return AudioBuffer(std::move(out), source.sample_rate());
}

std::string rir_file_name(std::string_view room_id, int source_index) {
    return "rir_" + std::string(room_id) + "_s" + std::to_string(source_index) + ".wav";
}

std::string room_sidecar_name(std::string_view room_id) { return "rir_" + std::string(room_id) + ".json"; }

}  // namespace fuss
