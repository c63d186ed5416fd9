#include "fusskit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>

#include "fusskit/rng.hpp"
#include "parallel.hpp"

namespace fuss {
namespace fs = std::filesystem;

namespace {

std::size_t split_index(Split s) { return static_cast<std::size_t>(s); }

Json per_split(const std::array<std::size_t, 3>& v) {
    Json j = Json::object();
    for (Split s : kAllSplits) j[split_name(s)] = v[split_index(s)];
    return j;
}

void check_keys(const Json& j, const char* section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw Error(Errc::invalid_argument, std::string("config section '") + section + "' must be an object");
    for (const auto& item : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
            throw Error(Errc::invalid_argument, std::string("unknown config key '") + section + "." + item.key() + "'");
        }
    }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_range(const Json& j, const char* key, Range& out) {
    if (!j.contains(key)) return;
    const auto& r = j.at(key);
    if (!r.is_array() || r.size() != 2) throw Error(Errc::invalid_argument, std::string("config key '") + key + "' needs [lo, hi]");
    out = {r[0].get<double>(), r[1].get<double>()};
}

void read_split_array(const Json& j, const char* key, std::array<std::size_t, 3>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    check_keys(v, key, {"train", "validation", "eval"});
    for (Split s : kAllSplits) read(v, split_name(s), out[split_index(s)]);
}

std::string safe_component(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    }
    return out;
}

std::string source_file_name(const MixtureSpec& spec, std::size_t k) {
    const SourceEvent& ev = spec.events[k];
    return (ev.role == EventRole::background ? "background" : "foreground") + std::to_string(k) + "_" +
           safe_component(ev.clip_id) + ".wav";
}

std::vector<fs::path> sorted_wavs(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Subdirectories holding mixture.wav, sorted by name.
std::vector<fs::path> example_dirs(const fs::path& root) {
    if (!fs::is_directory(root)) throw Error(Errc::file_not_found, "not a directory: " + root.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && fs::exists(e.path() / "mixture.wav")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

std::string describe(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(errc_name(err->code())) + ": " + e.what();
    return e.what();
}

}  // namespace

// ---------------------------------------------------------------------------

void PipelineConfig::sync() {
    mix.sample_rate = sample_rate;
    sim.sample_rate = sample_rate;
}

void PipelineConfig::validate() const {
    if (sample_rate <= 0) throw Error(Errc::invalid_argument, "sample_rate must be positive");
    if (workers < 1) throw Error(Errc::invalid_argument, "workers must be at least 1");
    for (Split s : kAllSplits) {
        if (examples_per_split[split_index(s)] == 0) {
            throw Error(Errc::invalid_argument, std::string("example count for ") + split_name(s) + " must be positive");
        }
        if (rooms_per_split[split_index(s)] == 0) {
            throw Error(Errc::invalid_argument, std::string("room count for ") + split_name(s) + " must be positive");
        }
    }
    if (mix.min_sources < 1 || mix.max_sources < mix.min_sources) {
        throw Error(Errc::invalid_argument, "mix source count range is invalid");
    }
    if (sources_per_room < mix.max_sources) {
        throw Error(Errc::invalid_argument, "sources_per_room must cover mix.max_sources");
    }
    if (!(mix.canvas_duration > 0.0)) throw Error(Errc::invalid_argument, "canvas_duration must be positive");
    if (mix.foreground_snr_db.hi < mix.foreground_snr_db.lo) throw Error(Errc::invalid_argument, "foreground_snr_db is reversed");
    metric.validate();
    if (loss.num_outputs < 0 || loss.num_outputs > kMaxPitOutputs) {
        throw Error(Errc::invalid_argument, "loss.num_outputs out of range");
    }
}

PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig c) {
    try {
        check_keys(j, "config",
                   {"master_seed", "examples_per_split", "rooms_per_split", "sample_rate", "workers", "split_targets",
                    "sources_per_room", "index", "mix", "sim", "rooms", "metric", "loss"});
        read(j, "master_seed", c.master_seed);
        read_split_array(j, "examples_per_split", c.examples_per_split);
        read_split_array(j, "rooms_per_split", c.rooms_per_split);
        read(j, "sample_rate", c.sample_rate);
        read(j, "workers", c.workers);
        read(j, "sources_per_room", c.sources_per_room);
        if (j.contains("split_targets")) {
            const auto& t = j.at("split_targets");
            check_keys(t, "split_targets", {"train", "validation", "eval"});
            for (Split s : kAllSplits) read(t, split_name(s), c.split_targets[split_index(s)]);
        }
        if (j.contains("index")) {
            const auto& s = j.at("index");
            check_keys(s, "index", {"single_label_only", "cc0_only"});
            read(s, "single_label_only", c.index.single_label_only);
            read(s, "cc0_only", c.index.cc0_only);
        }
        if (j.contains("mix")) {
            const auto& s = j.at("mix");
            check_keys(s, "mix", {"canvas_duration", "min_sources", "max_sources", "reference_level_dbfs",
                                  "foreground_snr_db", "max_clip_retries", "max_count_retries"});
            read(s, "canvas_duration", c.mix.canvas_duration);
            read(s, "min_sources", c.mix.min_sources);
            read(s, "max_sources", c.mix.max_sources);
            read(s, "reference_level_dbfs", c.mix.reference_level_dbfs);
            read_range(s, "foreground_snr_db", c.mix.foreground_snr_db);
            read(s, "max_clip_retries", c.mix.max_clip_retries);
            read(s, "max_count_retries", c.mix.max_count_retries);
        }
        if (j.contains("sim")) {
            const auto& s = j.at("sim");
            check_keys(s, "sim", {"speed_of_sound", "rir_length", "min_rir_length", "max_rir_length", "max_order",
                                  "jitter", "sinc_half_width"});
            read(s, "speed_of_sound", c.sim.speed_of_sound);
            read(s, "rir_length", c.sim.rir_length);
            read(s, "min_rir_length", c.sim.min_rir_length);
            read(s, "max_rir_length", c.sim.max_rir_length);
            read(s, "max_order", c.sim.max_order);
            read(s, "jitter", c.sim.jitter);
            read(s, "sinc_half_width", c.sim.sinc_half_width);
        }
        if (j.contains("rooms")) {
            const auto& s = j.at("rooms");
            check_keys(s, "rooms", {"width", "length", "height", "reflectivity_gain", "wall_margin",
                                    "min_source_mic_distance", "max_attempts"});
            read_range(s, "width", c.rooms.width);
            read_range(s, "length", c.rooms.length);
            read_range(s, "height", c.rooms.height);
            read_range(s, "reflectivity_gain", c.rooms.reflectivity_gain);
            read(s, "wall_margin", c.rooms.wall_margin);
            read(s, "min_source_mic_distance", c.rooms.min_source_mic_distance);
            read(s, "max_attempts", c.rooms.max_attempts);
        }
        if (j.contains("metric")) {
            const auto& s = j.at("metric");
            check_keys(s, "metric", {"epsilon", "inactive_margin_db", "formulation", "averaging"});
            read(s, "epsilon", c.metric.epsilon);
            read(s, "inactive_margin_db", c.metric.inactive_margin_db);
            if (s.contains("formulation")) c.metric.formulation = parse_formulation(s.at("formulation").get<std::string>());
            if (s.contains("averaging")) {
                const auto a = s.at("averaging").get<std::string>();
                if (a == "per_pair") c.averaging = MsiAveraging::per_pair;
                else if (a == "per_example") c.averaging = MsiAveraging::per_example;
                else throw Error(Errc::invalid_argument, "unknown averaging '" + a + "'");
            }
        }
        if (j.contains("loss")) {
            const auto& s = j.at("loss");
            check_keys(s, "loss", {"snr_max", "num_outputs", "reduction"});
            read(s, "snr_max", c.loss.snr_max);
            read(s, "num_outputs", c.loss.num_outputs);
            if (s.contains("reduction")) {
                const auto r = s.at("reduction").get<std::string>();
                if (r == "sum") c.loss.reduction = LossReduction::sum;
                else if (r == "mean") c.loss.reduction = LossReduction::mean;
                else throw Error(Errc::invalid_argument, "unknown reduction '" + r + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("bad config value: ") + e.what());
    }
    c.sync();
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path, PipelineConfig base) {
    Json j;
    try {
        j = Json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, path.string() + ": " + e.what());
    }
    return pipeline_config_from_json(j, std::move(base));
}

Json to_json(const PipelineConfig& c) {
    auto range = [](const Range& r) { return Json::array({r.lo, r.hi}); };
    Json targets = Json::object();
    for (Split s : kAllSplits) targets[split_name(s)] = c.split_targets[split_index(s)];
    return Json{
        {"master_seed", c.master_seed},
        {"examples_per_split", per_split(c.examples_per_split)},
        {"rooms_per_split", per_split(c.rooms_per_split)},
        {"sample_rate", c.sample_rate},
        {"workers", c.workers},
        {"split_targets", targets},
        {"sources_per_room", c.sources_per_room},
        {"index", {{"single_label_only", c.index.single_label_only}, {"cc0_only", c.index.cc0_only}}},
        {"mix",
         {{"canvas_duration", c.mix.canvas_duration},
          {"min_sources", c.mix.min_sources},
          {"max_sources", c.mix.max_sources},
          {"reference_level_dbfs", c.mix.reference_level_dbfs},
          {"foreground_snr_db", range(c.mix.foreground_snr_db)},
          {"max_clip_retries", c.mix.max_clip_retries},
          {"max_count_retries", c.mix.max_count_retries}}},
        {"sim",
         {{"speed_of_sound", c.sim.speed_of_sound},
          {"rir_length", c.sim.rir_length},
          {"min_rir_length", c.sim.min_rir_length},
          {"max_rir_length", c.sim.max_rir_length},
          {"max_order", c.sim.max_order},
          {"jitter", c.sim.jitter},
          {"sinc_half_width", c.sim.sinc_half_width}}},
        {"rooms",
         {{"width", range(c.rooms.width)},
          {"length", range(c.rooms.length)},
          {"height", range(c.rooms.height)},
          {"reflectivity_gain", range(c.rooms.reflectivity_gain)},
          {"wall_margin", c.rooms.wall_margin},
          {"min_source_mic_distance", c.rooms.min_source_mic_distance},
          {"max_attempts", c.rooms.max_attempts}}},
        {"metric",
         {{"epsilon", c.metric.epsilon},
          {"inactive_margin_db", c.metric.inactive_margin_db},
          {"formulation", formulation_name(c.metric.formulation)},
          {"averaging", c.averaging == MsiAveraging::per_pair ? "per_pair" : "per_example"}}},
        {"loss",
         {{"snr_max", c.loss.snr_max},
          {"num_outputs", c.loss.num_outputs},
          {"reduction", c.loss.reduction == LossReduction::sum ? "sum" : "mean"}}},
    };
}

std::uint64_t room_seed(std::uint64_t master, Split split, std::size_t index) {
    return derive_seed(master, {kRoomStream, static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(index)});
}

std::uint64_t example_seed(std::uint64_t master, Split split, std::size_t index) {
    return derive_seed(master, {kMixtureStream, static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(index)});
}

// ---------------------------------------------------------------------------

CorpusIndex run_index(const fs::path& corpus_root, const fs::path& index_out, const PipelineConfig& config) {
    CorpusIndex index = index_corpus(fs::absolute(corpus_root).lexically_normal(), config.index);
    std::string text;
    for (const auto& clip : index.clips) text += to_json(clip).dump() + "\n";
    write_text_atomic(index_out, text);
    return index;
}

std::vector<CorpusClip> load_index(const fs::path& index_path) {
    std::istringstream in(read_text(index_path));
    std::vector<CorpusClip> clips;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            clips.push_back(clip_from_json(Json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::missing_metadata, index_path.string() + ": " + e.what());
        }
    }
    return clips;
}

SplitAssignment run_split(const fs::path& index_path, const fs::path& split_out, const PipelineConfig& config) {
    const auto clips = load_index(index_path);
    SplitAssignment a = partition_by_uploader(clips, config.master_seed, config.split_targets);
    write_text_atomic(split_out, to_json(a).dump(2) + "\n");
    return a;
}

SplitAssignment load_split(const fs::path& split_path) {
    try {
        return split_assignment_from_json(Json::parse(read_text(split_path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::missing_metadata, split_path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

RirRunResult run_rir(Split split, const fs::path& rir_root, const PipelineConfig& config) {
    config.validate();
    const fs::path dir = rir_root / split_name(split);
    fs::create_directories(dir);
    const std::size_t n = config.rooms_per_split[split_index(split)];
    std::atomic<std::size_t> skipped{0};

    detail::parallel_for(n, config.workers, [&](std::size_t i) {
        const std::string room_id = room_name(split, i);
        // The sidecar is written last and marks the room as complete.
        if (fs::exists(dir / room_sidecar_name(room_id))) {
            ++skipped;
            return;
        }
        RoomSpec room = sample_room(room_seed(config.master_seed, split, i), config.sources_per_room, config.rooms);
        room.room_id = room_id;
        for (int k = 0; k < config.sources_per_room; ++k) {
            const Rir rir = image_method_rir(room, k, config.sim);
            write_wav(rir.samples, dir / rir_file_name(room_id, k), WavEncoding::float32);
        }
        write_text_atomic(dir / room_sidecar_name(room_id), room_sidecar_json(room, config.sim).dump(2) + "\n");
    });

    RirRunResult r;
    r.rooms = n;
    r.rir_files = n * static_cast<std::size_t>(config.sources_per_room);
    r.skipped_rooms = skipped.load();
    return r;
}

// ---------------------------------------------------------------------------

MixRunResult run_mix(const fs::path& index_path, const fs::path& split_path, Split split, RenderMode mode,
                     const fs::path& out_root, const PipelineConfig& config, const fs::path& rir_root) {
    config.validate();
    const auto clips = load_index(index_path);
    const SplitAssignment assignment = load_split(split_path);
    const ClipPool pool(clips_in_split(clips, assignment, split), config.mix.canvas_duration);

    std::optional<DirectoryRirStore> store;
    if (mode == RenderMode::reverberant) {
        if (rir_root.empty()) throw Error(Errc::invalid_argument, "reverberant mixing needs an RIR directory");
        store.emplace(rir_root / split_name(split));
    }

    const std::size_t n = config.examples_per_split[split_index(split)];
    std::vector<MixtureSpec> specs(n);
    for (std::size_t i = 0; i < n; ++i) {
        specs[i] = sample_mixture_spec(example_seed(config.master_seed, split, i), split, i, pool, config.mix);
    }

    const fs::path split_dir = out_root / split_name(split);
    fs::create_directories(split_dir);
    std::atomic<std::size_t> skipped{0};

    detail::parallel_for(n, config.workers, [&](std::size_t i) {
        const MixtureSpec& spec = specs[i];
        const fs::path final_dir = split_dir / spec.example_id;
        if (fs::exists(final_dir)) {
            ++skipped;
            return;
        }
        const RenderedExample ex = render_example(spec, pool, store ? &*store : nullptr, mode, config.mix);
        const fs::path tmp = split_dir / (".tmp_" + spec.example_id);
        fs::remove_all(tmp);
        fs::create_directories(tmp);
        write_wav(ex.mixture, tmp / "mixture.wav", WavEncoding::float32);
        for (std::size_t k = 0; k < ex.sources.size(); ++k) {
            write_wav(ex.sources[k], tmp / source_file_name(spec, k), WavEncoding::float32);
        }
        fs::rename(tmp, final_dir);
    });

    std::string list, jsonl;
    MixRunResult result;
    result.count_histogram.assign(static_cast<std::size_t>(config.mix.max_sources) + 1, 0);
    for (const auto& spec : specs) {
        const std::string base = std::string(split_name(split)) + "/" + spec.example_id + "/";
        list += base + "mixture.wav";
        for (std::size_t k = 0; k < spec.events.size(); ++k) list += "\t" + base + source_file_name(spec, k);
        list += "\n";
        jsonl += to_json(spec).dump() + "\n";
        ++result.count_histogram[spec.events.size()];
    }
    write_text_atomic(out_root / (std::string(split_name(split)) + "_example_list.txt"), list);
    write_text_atomic(out_root / (std::string(split_name(split)) + "_examples.jsonl"), jsonl);
    result.skipped = skipped.load();
    result.written = n - result.skipped;
    return result;
}

RenderedExample rerender(const MixtureSpec& spec, const std::vector<CorpusClip>& index, RenderMode mode,
                         const PipelineConfig& config, const fs::path& rir_root) {
    const ClipPool pool(index, config.mix.canvas_duration);
    std::optional<DirectoryRirStore> store;
    if (mode == RenderMode::reverberant) store.emplace(rir_root / split_name(spec.split));
    return render_example(spec, pool, store ? &*store : nullptr, mode, config.mix);
}

// ---------------------------------------------------------------------------

EvalRunResult run_eval(const fs::path& ref_dir, const fs::path& est_dir, const fs::path& report_dir,
                       const PipelineConfig& config) {
    config.validate();
    const auto dirs = example_dirs(ref_dir);
    std::vector<std::optional<ExampleEval>> evals(dirs.size());
    std::vector<std::string> errors(dirs.size());

    detail::parallel_for(dirs.size(), config.workers, [&](std::size_t i) {
        const std::string name = dirs[i].filename().string();
        try {
            const AudioBuffer mixture = read_wav(dirs[i] / "mixture.wav");
            std::vector<AudioBuffer> refs, ests;
            for (const auto& p : sorted_wavs(dirs[i])) {
                if (p.filename() != "mixture.wav") refs.push_back(read_wav(p));
            }
            for (const auto& p : sorted_wavs(est_dir / name)) ests.push_back(read_wav(p));
            if (ests.empty()) throw Error(Errc::missing_resource, "no estimates in " + (est_dir / name).string());
            if (refs.empty()) throw Error(Errc::missing_resource, "no references in " + dirs[i].string());
            ExampleEval e = evaluate_example(refs, ests, mixture, config.metric);
            e.example_id = name;
            evals[i] = std::move(e);
        } catch (const std::exception& e) {
            errors[i] = name + ": " + describe(e);
        }
    });

    EvalRunResult result{EvalReport(config.averaging), {}, {}};
    std::string per_example;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (!evals[i]) {
            result.failures.push_back(errors[i]);
            continue;
        }
        result.report.add(*evals[i]);
        per_example += to_json(*evals[i]).dump() + "\n";
        result.examples.push_back(std::move(*evals[i]));
    }

    write_text_atomic(report_dir / "report.json", report_json(result.report, config.metric).dump(2) + "\n");
    write_text_atomic(report_dir / "per_example.jsonl", per_example);

    const auto& cm = result.report.confusion_matrix();
    std::string csv = "reference_count";
    for (std::size_t e = 0; e < cm.size(); ++e) csv += ",est_" + std::to_string(e);
    csv += "\n";
    for (std::size_t r = 0; r < cm.size(); ++r) {
        csv += std::to_string(r);
        for (long long v : cm[r]) csv += "," + std::to_string(v);
        csv += "\n";
    }
    write_text_atomic(report_dir / "confusion_matrix.csv", csv);

    std::string input = "reference_count,input_si_snr_db\n";
    char buf[64];
    for (const auto& [count, values] : result.report.input_si_snr_values()) {
        for (double v : values) {
            std::snprintf(buf, sizeof buf, "%d,%.17g\n", count, v);
            input += buf;
        }
    }
    write_text_atomic(report_dir / "input_si_snr.csv", input);
    return result;
}

LossCheckResult run_loss_check(const fs::path& dir, const fs::path& out_path, const PipelineConfig& config) {
    config.validate();
    const auto dirs = example_dirs(dir);
    std::vector<std::optional<PitLossResult>> results(dirs.size());
    std::vector<std::string> errors(dirs.size());

    detail::parallel_for(dirs.size(), config.workers, [&](std::size_t i) {
        const std::string name = dirs[i].filename().string();
        try {
            const AudioBuffer mixture = read_wav(dirs[i] / "mixture.wav");
            std::vector<AudioBuffer> refs, ests;
            for (const auto& p : sorted_wavs(dirs[i])) {
                const std::string f = p.filename().string();
                if (starts_with(f, "estimate")) {
                    ests.push_back(read_wav(p));
                } else if (starts_with(f, "background") || starts_with(f, "foreground") || starts_with(f, "reference")) {
                    AudioBuffer r = read_wav(p);
                    if (!r.is_silent()) refs.push_back(std::move(r));
                }
            }
            if (refs.empty()) throw Error(Errc::degenerate_example, "no non-zero reference");
            results[i] = pit_loss(refs, ests, mixture, config.loss);
        } catch (const std::exception& e) {
            errors[i] = name + ": " + describe(e);
        }
    });

    LossCheckResult out;
    std::string jsonl;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const std::string name = dirs[i].filename().string();
        if (!results[i]) {
            out.failures.push_back(errors[i]);
            continue;
        }
        Json j = {{"example_id", name}};
        const Json body = to_json(*results[i]);
        for (const auto& [key, value] : body.items()) j[key] = value;
        jsonl += j.dump() + "\n";
        out.examples.emplace_back(name, std::move(*results[i]));
    }
    write_text_atomic(out_path, jsonl);
    return out;
}

OverlapTable run_overlap(const fs::path& split_dir, const fs::path& out_path, const PipelineConfig& config,
                         double window, double threshold_db) {
    const auto dirs = example_dirs(split_dir);
    std::vector<std::optional<OverlapStats>> stats(dirs.size());
    std::vector<int> counts(dirs.size(), 0);
    detail::parallel_for(dirs.size(), config.workers, [&](std::size_t i) {
        std::vector<AudioBuffer> sources;
        for (const auto& p : sorted_wavs(dirs[i])) {
            if (p.filename() != "mixture.wav") sources.push_back(read_wav(p));
        }
        if (sources.empty()) return;
        counts[i] = static_cast<int>(sources.size());
        stats[i] = overlap_stats(sources, window, threshold_db);
    });

    OverlapTable table;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (stats[i]) table.add(counts[i], *stats[i]);
    }
    if (!out_path.empty()) {
        std::size_t width = 0;
        for (const auto& [count, row] : table.counts()) width = std::max(width, row.size());
        std::string csv = "source_count";
        for (std::size_t k = 0; k < width; ++k) csv += ",active_" + std::to_string(k);
        csv += "\n";
        char buf[32];
        for (const auto& [count, row] : table.counts()) {
            csv += std::to_string(count);
            const auto pct = table.row(count);
            for (std::size_t k = 0; k < width; ++k) {
                std::snprintf(buf, sizeof buf, ",%.4f", k < pct.size() ? pct[k] : 0.0);
                csv += buf;
            }
            csv += "\n";
        }
        write_text_atomic(out_path, csv);
    }
    return table;
}

}  // namespace fuss
