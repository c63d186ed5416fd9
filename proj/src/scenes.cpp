#include "fusskit/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include "csv.hpp"
#include "fusskit/rng.hpp"
#include "json.hpp"

namespace fuss {
namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool is_wav(const fs::path& p) { return lower(p.extension().string()) == ".wav"; }

struct ManifestRow {
    std::string id;
    std::string path;
    std::string class_label;
    std::string uploader;
    std::string license;
};

std::vector<ManifestRow> read_manifest_csv(const fs::path& file) {
    const auto table = detail::read_csv(file);
    if (table.empty()) return {};
    const auto& header = table.front();
    auto column = [&](const char* name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (lower(trim(header[i])) == name) return i;
        }
        throw Error(Errc::missing_metadata, file.string() + ": manifest lacks column '" + name + "'");
    };
    const std::size_t c_id = column("id"), c_path = column("path"), c_label = column("class_label"),
                      c_uploader = column("uploader"), c_license = column("license");
    std::vector<ManifestRow> rows;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        if (row.size() == 1 && trim(row[0]).empty()) continue;
        auto get = [&](std::size_t c) { return c < row.size() ? trim(row[c]) : std::string(); };
        rows.push_back({get(c_id), get(c_path), get(c_label), get(c_uploader), get(c_license)});
    }
    return rows;
}

std::vector<ManifestRow> read_manifest_jsonl(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(Errc::io_error, "cannot open " + file.string());
    std::vector<ManifestRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            rows.push_back({j.at("id").get<std::string>(), j.at("path").get<std::string>(),
                            j.at("class_label").get<std::string>(), j.at("uploader").get<std::string>(),
                            j.at("license").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::missing_metadata,
                        file.string() + ":" + std::to_string(line_no) + ": bad manifest row: " + e.what());
        }
    }
    return rows;
}

std::string normalized_key(const fs::path& p) { return p.lexically_normal().generic_string(); }

double rms(std::span<const double> x) {
    return x.empty() ? 0.0 : std::sqrt(sum_squares(x) / static_cast<double>(x.size()));
}

double peak(std::span<const double> x) {
    double p = 0.0;
    for (double v : x) p = std::max(p, std::abs(v));
    return p;
}

}  // namespace

double CorpusIndex::total_hours() const {
    double seconds = 0.0;
    for (const auto& c : clips) seconds += c.duration;
    return seconds / 3600.0;
}

CorpusIndex index_corpus(const fs::path& root, const IndexOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw Error(Errc::file_not_found, "corpus root is not a directory: " + root.string());

    std::set<std::string> wavs;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && is_wav(entry.path())) {
            wavs.insert(normalized_key(fs::relative(entry.path(), root)));
        }
    }

    CorpusIndex index;
    std::vector<ManifestRow> rows;
    if (fs::exists(root / "manifest.csv")) {
        rows = read_manifest_csv(root / "manifest.csv");
    } else if (fs::exists(root / "manifest.jsonl")) {
        rows = read_manifest_jsonl(root / "manifest.jsonl");
    } else if (wavs.empty()) {
        return index;
    } else {
        throw Error(Errc::missing_manifest, "no manifest.csv or manifest.jsonl in " + root.string());
    }

    std::set<std::string> described;
    for (const auto& row : rows) described.insert(normalized_key(row.path));
    for (const auto& w : wavs) {
        if (!described.count(w)) throw Error(Errc::missing_metadata, "no manifest row for " + (root / w).string());
    }

    for (const auto& row : rows) {
        if (row.class_label.find(';') != std::string::npos) {
            if (options.single_label_only) {
                ++index.excluded_multi_label;
                continue;
            }
        }
        if (options.cc0_only && lower(row.license).rfind("cc0", 0) != 0) {
            ++index.excluded_license;
            continue;
        }
        CorpusClip clip{row.id, root / row.path, row.class_label, row.uploader, 0.0, row.license, 0};
        try {
            const WavInfo info = read_wav_info(clip.path);
            clip.duration = info.duration();
            clip.sample_rate = info.sample_rate;
        } catch (const Error& e) {
            ++index.skipped_unreadable;
            index.warnings.push_back(std::string("skipping unreadable clip ") + row.id + ": " + e.what());
            continue;
        }
        if (!(clip.duration > 0.0)) {
            ++index.skipped_unreadable;
            index.warnings.push_back("skipping empty clip " + row.id);
            continue;
        }
        index.clips.push_back(std::move(clip));
    }
    std::sort(index.clips.begin(), index.clips.end(),
              [](const CorpusClip& a, const CorpusClip& b) { return a.id < b.id; });
    return index;
}

// ---------------------------------------------------------------------------

const char* split_name(Split split) noexcept {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::eval: return "eval";
    }
    return "unknown";
}

Split parse_split(std::string_view name) {
    for (Split s : kAllSplits) {
        if (name == split_name(s)) return s;
    }
    throw Error(Errc::invalid_argument, "unknown split '" + std::string(name) + "' (train, validation, eval)");
}

Split SplitAssignment::split_of(const std::string& uploader) const {
    auto it = uploader_split.find(uploader);
    if (it == uploader_split.end()) throw Error(Errc::missing_metadata, "uploader '" + uploader + "' has no split");
    return it->second;
}

SplitAssignment partition_by_uploader(std::span<const CorpusClip> clips, std::uint64_t seed,
                                      std::array<double, 3> targets) {
    const double target_sum = targets[0] + targets[1] + targets[2];
    if (!(target_sum > 0.0) || std::any_of(targets.begin(), targets.end(), [](double t) { return t < 0.0; })) {
        throw Error(Errc::invalid_argument, "split targets must be non-negative with a positive sum");
    }

    std::map<std::string, std::size_t> sizes;
    for (const auto& c : clips) ++sizes[c.uploader];
    std::vector<std::pair<std::string, std::size_t>> uploaders(sizes.begin(), sizes.end());

    Rng rng(seed);
    for (std::size_t i = uploaders.size(); i > 1; --i) std::swap(uploaders[i - 1], uploaders[rng.below(i)]);
    std::stable_sort(uploaders.begin(), uploaders.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    SplitAssignment out;
    const double total = static_cast<double>(clips.size());
    for (std::size_t s = 0; s < 3; ++s) out.target_counts[s] = total * targets[s] / target_sum;
    const double largest_target = *std::max_element(out.target_counts.begin(), out.target_counts.end());

    if (uploaders.size() < 3) {
        out.warnings.push_back("only " + std::to_string(uploaders.size()) +
                               " uploader(s); splits cannot all be populated");
    }
    for (const auto& [name, size] : uploaders) {
        if (static_cast<double>(size) > largest_target) {
            out.warnings.push_back("uploader '" + name + "' owns " + std::to_string(size) +
                                   " clips, more than any split target; targets are unreachable");
        }
        std::size_t best = 0;
        double best_deficit = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < 3; ++s) {
            const double deficit = out.target_counts[s] - static_cast<double>(out.clip_counts[s]);
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = s;
            }
        }
        out.uploader_split[name] = static_cast<Split>(best);
        out.clip_counts[best] += size;
    }
    return out;
}

std::vector<CorpusClip> clips_in_split(std::span<const CorpusClip> clips, const SplitAssignment& assignment,
                                       Split split) {
    std::vector<CorpusClip> out;
    for (const auto& c : clips) {
        if (assignment.split_of(c.uploader) == split) out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------

ClipPool::ClipPool(std::vector<CorpusClip> clips, double canvas_duration) : clips_(std::move(clips)) {
    for (std::size_t i = 0; i < clips_.size(); ++i) {
        if (clips_[i].duration > canvas_duration) backgrounds_.push_back(i);
        if (clips_[i].duration < canvas_duration) foregrounds_.push_back(i);
        by_id_[clips_[i].id] = i;
    }
}

const CorpusClip& ClipPool::find(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error(Errc::missing_resource, "clip '" + id + "' is not in the pool");
    return clips_[it->second];
}

std::string example_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "example%05zu", index);
    return buf;
}

std::string room_name(Split split, std::size_t index) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s_%05zu", split_name(split), index);
    return buf;
}

MixtureSpec sample_mixture_spec(std::uint64_t seed, Split split, std::size_t example_index, const ClipPool& pool,
                                const MixConfig& config) {
    if (config.min_sources < 1 || config.max_sources < config.min_sources) {
        throw Error(Errc::invalid_argument, "invalid source count range");
    }
    if (pool.backgrounds().empty()) {
        throw Error(Errc::sampling_failure, std::string("split '") + split_name(split) +
                                                "' has no clip longer than the canvas for the background");
    }
    Rng rng(seed);
    const auto span = static_cast<std::uint64_t>(config.max_sources - config.min_sources + 1);
    for (int count_try = 0; count_try < config.max_count_retries; ++count_try) {
        const int count = config.min_sources + static_cast<int>(rng.below(span));

        const CorpusClip& bg = pool.clips()[pool.backgrounds()[rng.below(pool.backgrounds().size())]];
        std::set<std::string> used = {bg.class_label};
        std::vector<SourceEvent> events;
        events.push_back({bg.id, EventRole::background, 0.0, rng.uniform(0.0, bg.duration - config.canvas_duration),
                          config.canvas_duration, 0.0, bg.class_label});

        bool complete = true;
        for (int k = 1; k < count && complete; ++k) {
            const CorpusClip* pick = nullptr;
            for (int attempt = 0; attempt < config.max_clip_retries && !pool.foregrounds().empty(); ++attempt) {
                const CorpusClip& c = pool.clips()[pool.foregrounds()[rng.below(pool.foregrounds().size())]];
                if (!used.count(c.class_label)) {
                    pick = &c;
                    break;
                }
            }
            if (!pick) {
                complete = false;
                break;
            }
            used.insert(pick->class_label);
            const double start = rng.uniform(0.0, config.canvas_duration - pick->duration);
            const double snr = rng.uniform(config.foreground_snr_db.lo, config.foreground_snr_db.hi);
            events.push_back({pick->id, EventRole::foreground, start, 0.0, pick->duration, snr, pick->class_label});
        }
        if (!complete) continue;

        MixtureSpec spec;
        spec.example_id = example_name(example_index);
        spec.split = split;
        spec.events = std::move(events);
        spec.room_id = room_name(split, example_index);
        for (std::size_t k = 0; k < spec.events.size(); ++k) {
            spec.rir_ids.push_back(fs::path(rir_file_name(spec.room_id, static_cast<int>(k))).stem().string());
        }
        spec.seed = seed;
        return spec;
    }
    throw Error(Errc::sampling_failure, std::string("rejection sampling exhausted for split '") + split_name(split) +
                                            "' (not enough distinct classes?)");
}

// ---------------------------------------------------------------------------

Rir DirectoryRirStore::load(const std::string& room_id, int source_index) const {
    const fs::path file = dir_ / rir_file_name(room_id, source_index);
    try {
        return Rir{read_wav(file), source_index, room_id, 0};
    } catch (const Error& e) {
        if (e.code() == Errc::file_not_found) throw Error(Errc::missing_resource, "missing RIR " + file.string());
        throw;
    }
}

void MemoryRirStore::insert(Rir rir) {
    auto key = std::make_pair(rir.room_id, rir.source_index);
    rirs_.insert_or_assign(std::move(key), std::move(rir));
}

Rir MemoryRirStore::load(const std::string& room_id, int source_index) const {
    auto it = rirs_.find({room_id, source_index});
    if (it == rirs_.end()) {
        throw Error(Errc::missing_resource, "missing RIR " + rir_file_name(room_id, source_index));
    }
    return it->second;
}

AudioBuffer load_clip_wav(const CorpusClip& clip) {
    try {
        return read_wav(clip.path);
    } catch (const Error& e) {
        if (e.code() == Errc::file_not_found) throw Error(Errc::missing_resource, "missing clip " + clip.path.string());
        throw;
    }
}

RenderedExample render_example(const MixtureSpec& spec, const ClipPool& pool, const RirStore* rirs, RenderMode mode,
                               const MixConfig& config, const ClipLoader& loader) {
    if (mode == RenderMode::reverberant && rirs == nullptr) {
        throw Error(Errc::missing_resource, "reverberant rendering needs an RIR store");
    }
    const int sr = config.sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(config.canvas_duration * sr));
    RenderedExample out;
    double background_rms = 0.0;

    for (std::size_t k = 0; k < spec.events.size(); ++k) {
        const SourceEvent& ev = spec.events[k];
        const CorpusClip& clip = pool.find(ev.clip_id);
        const AudioBuffer audio = loader(clip);
        if (audio.sample_rate() != sr) {
            throw Error(Errc::sample_rate_mismatch, "clip " + clip.id + " is at " +
                                                        std::to_string(audio.sample_rate()) + " Hz, expected " +
                                                        std::to_string(sr));
        }
        const auto expected = static_cast<std::size_t>(std::llround(clip.duration * sr));
        if (audio.size() < expected) {
            throw Error(Errc::missing_resource, "clip " + clip.id + " is shorter than its manifest duration");
        }

        std::vector<double> canvas(n, 0.0);
        const auto src = audio.samples();
        if (ev.role == EventRole::background) {
            const auto offset = static_cast<std::size_t>(std::llround(ev.segment_offset * sr));
            if (offset + n > src.size()) {
                throw Error(Errc::missing_resource, "background clip " + clip.id + " too short for its segment");
            }
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(offset), n, canvas.begin());
            const double p = peak(canvas);
            const double scale =
                p > 0.0 ? std::pow(10.0, (config.reference_level_dbfs + ev.gain_db) / 20.0) / p : 0.0;
            for (double& v : canvas) v *= scale;
            background_rms = rms(canvas);
        } else {
            const auto start = static_cast<std::size_t>(std::floor(ev.start_time * sr));
            const std::size_t len = std::min(src.size(), n - std::min(n, start));
            const double level = rms(src);
            double scale = 0.0;
            if (level > 0.0) {
                scale = background_rms > 0.0
                            ? background_rms * std::pow(10.0, ev.gain_db / 20.0) / level
                            : std::pow(10.0, (config.reference_level_dbfs + ev.gain_db) / 20.0) / peak(src);
            }
            for (std::size_t i = 0; i < len; ++i) canvas[start + i] = src[i] * scale;
        }

        AudioBuffer placed(std::move(canvas), sr);
        if (mode == RenderMode::reverberant) {
            placed = render_reverberant(placed, rirs->load(spec.room_id, static_cast<int>(k)));
        }
        out.sources.push_back(std::move(placed));
    }

    std::vector<double> mix(n, 0.0);
    for (const auto& s : out.sources) {
        for (std::size_t i = 0; i < n; ++i) mix[i] += s[i];
    }
    out.mixture = AudioBuffer(std::move(mix), sr);
    return out;
}

// ---------------------------------------------------------------------------

OverlapStats overlap_stats(std::span<const AudioBuffer> sources, double window, double threshold_db) {
    if (sources.empty()) throw Error(Errc::empty_input, "overlap_stats needs at least one source");
    const std::size_t len = sources.front().size();
    const int sr = sources.front().sample_rate();
    for (const auto& s : sources) {
        if (s.size() != len) throw Error(Errc::length_mismatch, "overlap_stats: sources differ in length");
        if (s.sample_rate() != sr) throw Error(Errc::sample_rate_mismatch, "overlap_stats: sample rates differ");
    }
    const auto w = static_cast<std::size_t>(std::llround(window * sr));
    if (w == 0 || w > len) throw Error(Errc::invalid_argument, "overlap window is longer than the signal");

    OverlapStats stats;
    stats.num_windows = len / w;
    stats.active_counts.assign(stats.num_windows, 0);
    stats.active_fraction.assign(sources.size(), 0.0);
    const double ratio = std::pow(10.0, threshold_db / 10.0);
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto x = sources[s].samples();
        std::vector<double> energy(stats.num_windows);
        for (std::size_t i = 0; i < stats.num_windows; ++i) energy[i] = sum_squares(x.subspan(i * w, w));
        const double loudest = *std::max_element(energy.begin(), energy.end());
        if (loudest <= 0.0) continue;
        std::size_t active = 0;
        for (std::size_t i = 0; i < stats.num_windows; ++i) {
            if (energy[i] > 0.0 && energy[i] > loudest * ratio) {
                ++stats.active_counts[i];
                ++active;
            }
        }
        stats.active_fraction[s] = static_cast<double>(active) / static_cast<double>(stats.num_windows);
    }
    stats.percent.assign(std::max<std::size_t>(5, sources.size() + 1), 0.0);
    for (int c : stats.active_counts) stats.percent[static_cast<std::size_t>(c)] += 1.0;
    for (double& p : stats.percent) p *= 100.0 / static_cast<double>(stats.num_windows);
    return stats;
}

void OverlapTable::add(int source_count, const OverlapStats& stats) {
    auto& row = counts_[source_count];
    const std::size_t width = std::max<std::size_t>(5, static_cast<std::size_t>(source_count) + 1);
    if (row.size() < width) row.resize(width, 0);
    for (int c : stats.active_counts) {
        if (static_cast<std::size_t>(c) >= row.size()) row.resize(static_cast<std::size_t>(c) + 1, 0);
        ++row[static_cast<std::size_t>(c)];
    }
}

std::vector<double> OverlapTable::row(int source_count) const {
    auto it = counts_.find(source_count);
    if (it == counts_.end()) return {};
    const double total = static_cast<double>(std::accumulate(it->second.begin(), it->second.end(), 0LL));
    std::vector<double> out(it->second.size(), 0.0);
    if (total == 0.0) return out;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = 100.0 * static_cast<double>(it->second[k]) / total;
    return out;
}

}  // namespace fuss
