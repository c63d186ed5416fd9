#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fusskit/audio.hpp"
#include "fusskit/room.hpp"

namespace fuss {

inline constexpr int kManifestSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Source corpus

struct CorpusClip {
    std::string id;
    std::filesystem::path path;
    std::string class_label;
    std::string uploader;
    double duration = 0.0;  // seconds, from the WAV header
    std::string license;
    int sample_rate = 0;
};

struct IndexOptions {
    bool single_label_only = true;
    bool cc0_only = true;
};

struct CorpusIndex {
    std::vector<CorpusClip> clips;
    std::size_t skipped_unreadable = 0;
    std::size_t excluded_multi_label = 0;
    std::size_t excluded_license = 0;
    std::vector<std::string> warnings;

    double total_hours() const;
};

// Reads `manifest.csv` or `manifest.jsonl` under root (columns id, path,
// class_label, uploader, license; multiple labels separated by ';').
// Durations come from the WAV headers. Every WAV below root must have a
// manifest row. A root without any WAV files yields an empty index even
// when the manifest is absent.
CorpusIndex index_corpus(const std::filesystem::path& root, const IndexOptions& options = {});

// ---------------------------------------------------------------------------
// Uploader-disjoint splits

enum class Split { train = 0, validation = 1, eval = 2 };
inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::validation, Split::eval};

const char* split_name(Split split) noexcept;
Split parse_split(std::string_view name);

struct SplitAssignment {
    std::map<std::string, Split> uploader_split;
    std::array<std::size_t, 3> clip_counts{};
    std::array<double, 3> target_counts{};
    std::vector<std::string> warnings;

    Split split_of(const std::string& uploader) const;
};

// Whole uploaders are assigned largest-first (random tie order) to the split
// with the largest remaining deficit. `targets` are relative clip-count
// proportions. Unreachable targets are reported in warnings, not thrown.
SplitAssignment partition_by_uploader(std::span<const CorpusClip> clips, std::uint64_t seed,
                                      std::array<double, 3> targets = {7237.0, 2883.0, 2257.0});

std::vector<CorpusClip> clips_in_split(std::span<const CorpusClip> clips, const SplitAssignment& assignment,
                                       Split split);

// ---------------------------------------------------------------------------
// Mixture recipes

enum class EventRole { background, foreground };

struct SourceEvent {
    std::string clip_id;
    EventRole role = EventRole::foreground;
    double start_time = 0.0;        // seconds on the canvas
    double segment_offset = 0.0;    // seconds into the source file
    double segment_duration = 0.0;  // seconds
    double gain_db = 0.0;           // level relative to the background reference
    std::string class_label;
};

struct MixtureSpec {
    int schema_version = kManifestSchemaVersion;
    std::string example_id;
    Split split = Split::train;
    std::vector<SourceEvent> events;  // background first
    std::string room_id;
    std::vector<std::string> rir_ids;  // one per event, same order
    std::uint64_t seed = 0;
};

struct MixConfig {
    double canvas_duration = 10.0;
    int sample_rate = kDefaultSampleRate;
    int min_sources = 1;
    int max_sources = 4;
    // Background segments are peak-normalized to this level.
    double reference_level_dbfs = -25.0;
    // Foreground RMS relative to background RMS, uniform in this range.
    Range foreground_snr_db{-5.0, 25.0};
    int max_clip_retries = 100;
    int max_count_retries = 100;
};

// Read-only view of one split's clips partitioned by role eligibility.
class ClipPool {
public:
    ClipPool(std::vector<CorpusClip> clips, double canvas_duration);

    const std::vector<CorpusClip>& clips() const noexcept { return clips_; }
    const std::vector<std::size_t>& backgrounds() const noexcept { return backgrounds_; }
    const std::vector<std::size_t>& foregrounds() const noexcept { return foregrounds_; }
    const CorpusClip& find(const std::string& id) const;

private:
    std::vector<CorpusClip> clips_;
    std::vector<std::size_t> backgrounds_;  // longer than the canvas
    std::vector<std::size_t> foregrounds_;  // shorter than the canvas
    std::map<std::string, std::size_t> by_id_;
};

std::string example_name(std::size_t index);
std::string room_name(Split split, std::size_t index);

// Deterministic in (seed, split, example_index, pool, config). Class labels
// are made distinct by rejection: each clip is redrawn up to
// max_clip_retries times, after which the source count is redrawn.
MixtureSpec sample_mixture_spec(std::uint64_t seed, Split split, std::size_t example_index, const ClipPool& pool,
                                const MixConfig& config = {});

// ---------------------------------------------------------------------------
// Rendering

class RirStore {
public:
    virtual ~RirStore() = default;
    virtual Rir load(const std::string& room_id, int source_index) const = 0;
};

// Reads rir_<room>_s<k>.wav files written by the rir pipeline stage.
class DirectoryRirStore : public RirStore {
public:
    explicit DirectoryRirStore(std::filesystem::path dir) : dir_(std::move(dir)) {}
    Rir load(const std::string& room_id, int source_index) const override;

private:
    std::filesystem::path dir_;
};

class MemoryRirStore : public RirStore {
public:
    void insert(Rir rir);
    Rir load(const std::string& room_id, int source_index) const override;

private:
    std::map<std::pair<std::string, int>, Rir> rirs_;
};

using ClipLoader = std::function<AudioBuffer(const CorpusClip&)>;
AudioBuffer load_clip_wav(const CorpusClip& clip);

enum class RenderMode { dry, reverberant };

struct RenderedExample {
    std::vector<AudioBuffer> sources;  // same order as spec.events
    AudioBuffer mixture;
};

RenderedExample render_example(const MixtureSpec& spec, const ClipPool& pool, const RirStore* rirs,
                               RenderMode mode, const MixConfig& config = {},
                               const ClipLoader& loader = load_clip_wav);

// ---------------------------------------------------------------------------
// Local overlap

struct OverlapStats {
    std::vector<int> active_counts;       // per window
    std::vector<double> percent;          // percent of windows with k active sources
    std::vector<double> active_fraction;  // per source
    std::size_t num_windows = 0;
};

// A source is active in a window when its window energy is within
// |threshold_db| of its own loudest window. Trailing partial windows are dropped.
OverlapStats overlap_stats(std::span<const AudioBuffer> sources, double window = 0.025,
                           double threshold_db = -60.0);

// Pools window counts by example source count (one row per count).
class OverlapTable {
public:
    void add(int source_count, const OverlapStats& stats);
    std::vector<double> row(int source_count) const;
    const std::map<int, std::vector<long long>>& counts() const noexcept { return counts_; }

private:
    std::map<int, std::vector<long long>> counts_;
};

}  // namespace fuss
