#include <cmath>
#include <string>

#include "fusskit/room.hpp"

namespace fuss {
namespace {

// Octave-band absorption coefficients, 125 Hz .. 8 kHz. The 8 kHz column
// repeats the 4 kHz value where tables stop at 4 kHz.
struct AbsorptionRow {
    const char* name;
    BandValues alpha;
};

constexpr AbsorptionRow kAbsorption[] = {
    {"brick", {0.03, 0.03, 0.03, 0.04, 0.05, 0.07, 0.07}},
    {"concrete", {0.01, 0.01, 0.015, 0.02, 0.02, 0.02, 0.02}},
    {"plaster", {0.013, 0.015, 0.02, 0.03, 0.04, 0.05, 0.05}},
    {"glass", {0.35, 0.25, 0.18, 0.12, 0.07, 0.04, 0.04}},
    {"plywood", {0.28, 0.22, 0.17, 0.09, 0.10, 0.11, 0.11}},
    {"carpet", {0.02, 0.06, 0.14, 0.37, 0.60, 0.65, 0.65}},
    {"curtain", {0.07, 0.31, 0.49, 0.75, 0.70, 0.60, 0.60}},
    {"acoustic_tile", {0.50, 0.70, 0.60, 0.70, 0.70, 0.50, 0.50}},
};

std::vector<Material> build_table() {
    std::vector<Material> table;
    for (const auto& row : kAbsorption) {
        Material m{row.name, {}};
        for (std::size_t b = 0; b < kNumBands; ++b) m.band_reflectivity[b] = std::sqrt(1.0 - row.alpha[b]);
        table.push_back(std::move(m));
    }
    return table;
}

}  // namespace

const std::vector<Material>& material_table() {
    static const std::vector<Material> table = build_table();
    return table;
}

const Material& material_by_name(std::string_view name) {
    for (const auto& m : material_table()) {
        if (m.name == name) return m;
    }
    throw Error(Errc::invalid_argument, "unknown material '" + std::string(name) + "'");
}

}  // namespace fuss
