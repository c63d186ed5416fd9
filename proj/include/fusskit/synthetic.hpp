#pragma once

#include <cstdint>
#include <filesystem>

namespace fuss {

// Generator for a small stand-in source corpus with the same manifest
// layout as a real one. Each class has its own timbre (harmonic tone, band
// noise, amplitude-modulated tone, click train) at a class-specific
// frequency, so oracle masks can separate them. Uploader sizes follow a
// Zipf-like law.
struct SynthCorpusOptions {
    int num_classes = 10;
    int backgrounds_per_class = 2;
    int foregrounds_per_class = 6;
    int num_uploaders = 12;
    int sample_rate = 16000;
    double background_duration_lo = 10.5;  // seconds
    double background_duration_hi = 14.0;
    double foreground_duration_lo = 0.5;
    double foreground_duration_hi = 6.0;
    // Adds one multi-label row and one non-CC0 row to exercise index filters.
    bool include_filtered_rows = false;
    std::uint64_t seed = 0;
};

struct SynthCorpusSummary {
    int num_clips = 0;
    double total_seconds = 0.0;
};

// Writes <dir>/audio/*.wav (16-bit PCM) and <dir>/manifest.csv.
SynthCorpusSummary write_synthetic_corpus(const std::filesystem::path& dir, const SynthCorpusOptions& options = {});

}  // namespace fuss
