#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fusskit/audio.hpp"

namespace fuss {

inline constexpr std::size_t kNumBands = 7;
inline constexpr std::array<double, kNumBands> kBandCenters = {125.0,  250.0,  500.0, 1000.0,
                                                               2000.0, 4000.0, 8000.0};
using BandValues = std::array<double, kNumBands>;

struct Material {
    std::string name;
    BandValues band_reflectivity{};  // pressure reflection magnitude per octave band, in [0, 1]
};

// Eight common room-surface materials; reflectivity is sqrt(1 - alpha) of
// tabulated octave-band absorption coefficients.
const std::vector<Material>& material_table();
const Material& material_by_name(std::string_view name);

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

double distance(const Vec3& a, const Vec3& b) noexcept;

// Surfaces are ordered x=0, x=width, y=0, y=length, z=0 (floor), z=height.
inline constexpr std::size_t kNumSurfaces = 6;

struct RoomSpec {
    std::string room_id;
    double width = 0.0;   // x extent, m
    double length = 0.0;  // y extent, m
    double height = 0.0;  // z extent, m
    std::array<Material, kNumSurfaces> wall_materials;
    double reflectivity_gain = 1.0;
    Vec3 mic_position;
    std::vector<Vec3> source_positions;
    std::uint64_t seed = 0;

    bool contains(const Vec3& p) const noexcept;
    double volume() const noexcept { return width * length * height; }
};

struct Range {
    double lo;
    double hi;
};

struct RoomRanges {
    Range width{3.0, 7.0};
    Range length{4.0, 8.0};
    Range height{2.13, 3.05};
    Range reflectivity_gain{0.5, 0.95};
    double wall_margin = 0.10;
    double min_source_mic_distance = 0.20;
    int max_attempts = 1000;
};

// Deterministic in (seed, n_sources, ranges). Sources closer than the
// minimum distance to the mic are redrawn; gives up after max_attempts.
RoomSpec sample_room(std::uint64_t seed, int n_sources, const RoomRanges& ranges = {});

struct SimConfig {
    int sample_rate = kDefaultSampleRate;
    double speed_of_sound = 343.0;
    double rir_length = 0.0;  // seconds; <= 0 selects the Sabine-based default
    double min_rir_length = 0.5;
    double max_rir_length = 3.0;
    int max_order = -1;  // < 0 derives the order from rir length and room size
    double jitter = 0.08;  // metres, uniform per axis, images only
    int sinc_half_width = 8;
};

// Half-width of the per-reflection band filters (17-tap linear phase).
inline constexpr int kBandFilterHalfWidth = 8;

// Total spread of one arrival around its nominal delay, in samples.
inline int filter_half_width(const SimConfig& sim) { return sim.sinc_half_width + kBandFilterHalfWidth; }

// Longest octave-band Sabine reverberation time, in seconds.
double sabine_t60(const RoomSpec& room);
double resolved_rir_length(const RoomSpec& room, const SimConfig& sim);
int resolved_max_order(const RoomSpec& room, const SimConfig& sim);

struct ImageSource {
    std::array<int, 3> index{};    // lattice index n per axis
    std::array<int, 3> mirror{};   // parity q per axis
    int order = 0;                 // total wall hits
    Vec3 position;                 // after jitter
    double distance = 0.0;
    double delay_samples = 0.0;
    BandValues gain{};             // cumulative band reflectivity including the room gain
};

// All images that contribute to image_method_rir, direct path first.
std::vector<ImageSource> enumerate_images(const RoomSpec& room, int source_index, const SimConfig& sim);

struct Rir {
    AudioBuffer samples;
    int source_index = 0;
    std::string room_id;
    int max_order = 0;
};

Rir image_method_rir(const RoomSpec& room, int source_index, const SimConfig& sim = {});

struct T60Estimate {
    double seconds = 0.0;
    bool censored = false;  // the -25 dB point was never reached; seconds is a lower bound
};

// Schroeder backward integration; crossing time fitted against level
// between -5 and -25 dB, extrapolated to 60 dB.
T60Estimate measure_t60(const AudioBuffer& rir);
inline T60Estimate measure_t60(const Rir& rir) { return measure_t60(rir.samples); }

// Convolves and truncates back to the source length.
AudioBuffer render_reverberant(const AudioBuffer& source, const Rir& rir);

std::string rir_file_name(std::string_view room_id, int source_index);
std::string room_sidecar_name(std::string_view room_id);

}  // namespace fuss
