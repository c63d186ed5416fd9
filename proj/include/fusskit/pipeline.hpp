#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fusskit/losses.hpp"
#include "fusskit/metrics.hpp"
#include "fusskit/room.hpp"
#include "fusskit/scenes.hpp"
#include "fusskit/serialization.hpp"

namespace fuss {

struct PipelineConfig {
    std::uint64_t master_seed = 0;
    std::array<std::size_t, 3> examples_per_split{20000, 1000, 1000};
    std::array<std::size_t, 3> rooms_per_split{20000, 1000, 1000};
    int sample_rate = kDefaultSampleRate;
    int workers = 1;
    std::array<double, 3> split_targets{7237.0, 2883.0, 2257.0};
    int sources_per_room = 4;
    IndexOptions index;
    MixConfig mix;
    SimConfig sim;
    RoomRanges rooms;
    MetricConfig metric;
    MsiAveraging averaging = MsiAveraging::per_pair;
    LossConfig loss;

    // Copies sample_rate into the mix and simulator settings.
    void sync();
    void validate() const;
};

// Keys mirror the struct; absent keys keep the values in `base`, unknown
// keys are rejected.
PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig base = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base = {});
Json to_json(const PipelineConfig& config);

// Seed streams keep room and mixture draws independent of each other.
inline constexpr std::uint64_t kRoomStream = 1;
inline constexpr std::uint64_t kMixtureStream = 2;
std::uint64_t room_seed(std::uint64_t master, Split split, std::size_t index);
std::uint64_t example_seed(std::uint64_t master, Split split, std::size_t index);

// index: corpus -> JSONL of CorpusClip records (absolute paths).
CorpusIndex run_index(const std::filesystem::path& corpus_root, const std::filesystem::path& index_out,
                      const PipelineConfig& config);
std::vector<CorpusClip> load_index(const std::filesystem::path& index_path);

// split: index -> uploader assignment JSON.
SplitAssignment run_split(const std::filesystem::path& index_path, const std::filesystem::path& split_out,
                          const PipelineConfig& config);
SplitAssignment load_split(const std::filesystem::path& split_path);

struct RirRunResult {
    std::size_t rooms = 0;
    std::size_t rir_files = 0;
    std::size_t skipped_rooms = 0;  // already complete on disk
};

// rir: <rir_root>/<split>/rir_<room>_s<k>.wav plus rir_<room>.json per room.
RirRunResult run_rir(Split split, const std::filesystem::path& rir_root, const PipelineConfig& config);

struct MixRunResult {
    std::size_t written = 0;
    std::size_t skipped = 0;  // example directory already present
    std::vector<std::size_t> count_histogram;  // index = source count
};

// mix: <out>/<split>/exampleNNNNN/{mixture,background0_*,foreground<k>_*}.wav,
// <out>/<split>_example_list.txt and <out>/<split>_examples.jsonl.
MixRunResult run_mix(const std::filesystem::path& index_path, const std::filesystem::path& split_path, Split split,
                     RenderMode mode, const std::filesystem::path& out_root, const PipelineConfig& config,
                     const std::filesystem::path& rir_root = {});

// Re-renders one recorded spec; equals the files run_mix wrote for it.
RenderedExample rerender(const MixtureSpec& spec, const std::vector<CorpusClip>& index, RenderMode mode,
                         const PipelineConfig& config, const std::filesystem::path& rir_root = {});

struct EvalRunResult {
    EvalReport report;
    std::vector<ExampleEval> examples;
    std::vector<std::string> failures;  // "<example>: <reason>"
};

// eval: every subdirectory of ref_dir holding mixture.wav is an example; its
// other WAVs are references. Estimates are the WAVs in est_dir/<example>/.
// Writes report.json, per_example.jsonl, confusion_matrix.csv and
// input_si_snr.csv into report_dir.
EvalRunResult run_eval(const std::filesystem::path& ref_dir, const std::filesystem::path& est_dir,
                       const std::filesystem::path& report_dir, const PipelineConfig& config);

struct LossCheckResult {
    std::vector<std::pair<std::string, PitLossResult>> examples;
    std::vector<std::string> failures;
};

// loss-check: subdirectories with mixture.wav, reference WAVs
// (background*, foreground*, reference*) and estimate*.wav. All-zero
// references leave the active set. Writes one JSON line per example.
LossCheckResult run_loss_check(const std::filesystem::path& dir, const std::filesystem::path& out_path,
                               const PipelineConfig& config);

// overlap: reads rendered sources of every example under split_dir and
// pools per-count local overlap. Writes a CSV when out_path is non-empty.
OverlapTable run_overlap(const std::filesystem::path& split_dir, const std::filesystem::path& out_path,
                         const PipelineConfig& config, double window = 0.025, double threshold_db = -60.0);

}  // namespace fuss
